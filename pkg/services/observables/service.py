"""
样本统计量
经验 Stieltjes 变换、区间计数、对数特征多项式场、线性统计量、特征值位移与 loop 方程诊断

所有函数既接受单个 Sample，也接受 (样本数, N) 的特征值矩阵（沿最后一维求和）
"""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from models.ensemble import Sample
from models.potential import Potential
from services.equilibrium import EquilibriumMeasure, from_above
from services.potential import divided_difference, evaluate
from utils.exceptions import CollisionError

COLLISION_DISTANCE = 1e-300
# |z − w| 低于该值时 f(z,w) 取对角公式 ½ s''(z)
DIAGONAL_DISTANCE = 1e-12

SampleLike = Union[Sample, np.ndarray]


@dataclass(frozen=True)
class FieldValue:
    """L_N 在一点的值"""

    re: float
    im: float
    at: complex

    def __post_init__(self):
        if not (np.isfinite(self.re) and np.isfinite(self.im)):
            raise ValueError(f"场值非有限: {self.re} + {self.im}i at {self.at}")

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class LoopValues:
    """loop 方程诊断量"""

    P: complex
    Delta: complex
    fzw: complex


def _lambdas(s: SampleLike) -> np.ndarray:
    if isinstance(s, Sample):
        return np.asarray(s.lambdas, dtype=float)
    return np.asarray(s, dtype=float)


def _check_collision(lam: np.ndarray, z: complex) -> None:
    if lam.size and np.min(np.abs(lam - z)) < COLLISION_DISTANCE:
        raise CollisionError(f"求值点 {z} 与特征值重合")


def _reduce(values: np.ndarray):
    """一维输入返回标量"""
    return values.item() if np.ndim(values) == 0 else values


# ============================================
# Stieltjes 变换与计数
# ============================================

def stieltjes_emp(s: SampleLike, z: complex, order: int = 0):
    """
    s_N(z) = (1/N) Σ 1/(λ_k − z) 及其关于 z 的一阶、二阶导数

    Args:
        s: 样本或特征值矩阵
        z: 求值点
        order: 0/1/2

    Returns:
        复数（矩阵输入返回每行一个值）
    """
    if order not in (0, 1, 2):
        raise ValueError(f"不支持的导数阶数: {order}")
    lam = _lambdas(s)
    _check_collision(lam, z)
    inv = 1.0 / (lam - z)
    if order == 0:
        out = inv.mean(axis=-1)
    elif order == 1:
        out = (inv**2).mean(axis=-1)
    else:
        out = 2.0 * (inv**3).mean(axis=-1)
    return _reduce(out)


def count_interval(s: SampleLike, low: float, high: float):
    """
    𝒩(I) = #{k : λ_k ∈ [low, high]}

    Args:
        s: 样本或特征值矩阵
        low: 左端点（可为 −inf）
        high: 右端点（可为 inf）

    Returns:
        整数（矩阵输入返回每行一个值）
    """
    lam = _lambdas(s)
    if low > high:
        return 0 if lam.ndim == 1 else np.zeros(lam.shape[0], dtype=int)
    if lam.ndim == 1:
        return int(np.searchsorted(lam, high, side="right") - np.searchsorted(lam, low, side="left"))
    return ((lam >= low) & (lam <= high)).sum(axis=-1)


def rescaled_points(s: SampleLike, E: float, ell: float, window: float = 5.0) -> np.ndarray:
    """
    E 附近按 ℓ(E) 放大的点过程 (λ_k − E)/ℓ，只保留 |λ_k − E| <= window·ℓ

    Args:
        s: 单个样本
        E: 中心能量
        ell: 微观尺度
        window: 窗口半宽（以 ℓ 计）

    Returns:
        升序的放大坐标
    """
    if ell <= 0:
        raise ValueError("ell 必须为正")
    lam = _lambdas(s)
    if lam.ndim != 1:
        raise ValueError("rescaled_points 只接受单个样本")
    lo = np.searchsorted(lam, E - window * ell, side="left")
    hi = np.searchsorted(lam, E + window * ell, side="right")
    return (lam[lo:hi] - E) / ell


# ============================================
# 对数场与线性统计量
# ============================================

def log_char_batch(s: SampleLike, m: EquilibriumMeasure, z: complex) -> np.ndarray:
    """
    L_N(z) = Σ log(z − λ_j) − N ∫ log(z − x) dμ_V(x)，主值对数，实轴取上方极限

    Returns:
        复数（矩阵输入返回每行一个值）
    """
    lam = _lambdas(s)
    z = complex(from_above(z))
    _check_collision(lam, z)
    N = lam.shape[-1]
    # z − λ 保留虚部 +0，负实数的辐角为 π
    diff = from_above(z - lam)
    return _reduce(np.log(diff).sum(axis=-1) - N * m.log_transform(z))


def log_char(s: SampleLike, m: EquilibriumMeasure, z: complex) -> FieldValue:
    """单个样本的 L_N(z)"""
    value = complex(log_char_batch(s, m, z))
    return FieldValue(re=value.real, im=value.imag, at=complex(z))


def linear_stat(s: SampleLike, m: EquilibriumMeasure, f: Callable[[np.ndarray], np.ndarray]):
    """
    S_N(f) = Σ f(λ_j) − N ∫ f dμ_V

    Args:
        s: 样本或特征值矩阵
        m: 平衡测度
        f: 向量化实函数

    Returns:
        实数（矩阵输入返回每行一个值）
    """
    lam = _lambdas(s)
    N = lam.shape[-1]
    return _reduce(np.asarray(f(lam), dtype=float).sum(axis=-1) - N * m.expect(f))


def displacement(s: SampleLike, m: EquilibriumMeasure, n: int, beta: float):
    """
    Y_N(n) = πN √(β / log N) ρ_V(γ_n) (λ_n − γ_n)

    Args:
        s: 样本或特征值矩阵
        m: 平衡测度
        n: 1 <= n <= N
        beta: β

    Returns:
        实数（矩阵输入返回每行一个值）
    """
    lam = _lambdas(s)
    N = lam.shape[-1]
    if not 1 <= n <= N:
        raise ValueError(f"n 超出范围: n={n}, N={N}")
    if N < 2:
        raise ValueError("N 必须不小于 2")
    gamma = m.quantile(n, N)
    scale = np.pi * N * np.sqrt(beta / np.log(N)) * float(m.density(gamma))
    return _reduce(scale * (lam[..., n - 1] - gamma))


# ============================================
# loop 方程
# ============================================

def f_kernel(s: SampleLike, z: complex, w: complex):
    """
    f(z,w) = ∂_w (s(z) − s(w))/(z − w) = (1/N) Σ 1/((λ−z)(λ−w)²)

    对角处取 ½ s''(z)
    """
    lam = _lambdas(s)
    _check_collision(lam, z)
    _check_collision(lam, w)
    if abs(z - w) < DIAGONAL_DISTANCE:
        return _reduce((1.0 / (lam - z) ** 3).mean(axis=-1))
    return _reduce((1.0 / ((lam - z) * (lam - w) ** 2)).mean(axis=-1))


def loop_observables(s: SampleLike, m: EquilibriumMeasure, z: complex, w: complex) -> LoopValues:
    """
    P(z) = s(z)² + V'(z) s(z) + h(z)
    Δ(z) = (1/N) Σ (V'(λ_k) − V'(z))/(λ_k − z) − h(z)
    f(z,w)

    Args:
        s: 单个样本
        m: 平衡测度
        z: 求值点
        w: 第二个求值点

    Returns:
        LoopValues
    """
    lam = _lambdas(s)
    sz = complex(stieltjes_emp(lam, z))
    h = complex(m.h_of(z))
    v1 = complex(evaluate(m.potential, complex(z), 1))
    P = sz * sz + v1 * sz + h
    delta = complex(np.mean(divided_difference(m.potential, lam, complex(z)), axis=-1)) - h
    return LoopValues(P=P, Delta=delta, fzw=complex(f_kernel(lam, z, w)))


def loop_residual_rank1(s: SampleLike, potential: Potential, beta: float, z: complex):
    """
    s(z)² − (1/N)(1 − 2/β) s'(z) + (1/N) Σ V'(λ_k)/(λ_k − z)，其期望为 0

    Returns:
        复数（矩阵输入返回每行一个值）
    """
    lam = _lambdas(s)
    N = lam.shape[-1]
    _check_collision(lam, z)
    inv = 1.0 / (lam - z)
    sz = inv.mean(axis=-1)
    ds = (inv**2).mean(axis=-1)
    force = (evaluate(potential, lam, 1) * inv).mean(axis=-1)
    return _reduce(sz * sz - (1.0 - 2.0 / beta) * ds / N + force)


def loop_residual_rankn(
    s: SampleLike,
    potential: Potential,
    beta: float,
    z: complex,
    zs: Sequence[complex],
):
    """
    rank-n 组合：
        R_1(z) Π_i s(z_i) + (2/(N²β)) Σ_j f(z, z_j) Π_{i≠j} s(z_i)
    其中 R_1 是 rank-1 残差，期望为 0

    Args:
        s: 样本或特征值矩阵
        potential: 外势
        beta: β
        z: 主求值点
        zs: 其余 n−1 个求值点

    Returns:
        复数（矩阵输入返回每行一个值）
    """
    lam = _lambdas(s)
    N = lam.shape[-1]
    base = np.asarray(loop_residual_rank1(lam, potential, beta, z))
    s_values = [np.asarray(stieltjes_emp(lam, zj)) for zj in zs]
    product = np.ones_like(base)
    for value in s_values:
        product = product * value
    total = base * product
    for j, zj in enumerate(zs):
        others = np.ones_like(base)
        for i, value in enumerate(s_values):
            if i != j:
                others = others * value
        total = total + 2.0 / (N * N * beta) * np.asarray(f_kernel(lam, z, zj)) * others
    return _reduce(total)


def log_field_derivative(s: SampleLike, m: EquilibriumMeasure, z: complex, step: Optional[float] = None):
    """中心差分 d/dz L_N(z)（沿实方向），用于与 −N(s_N − m_V) 对照"""
    h = step or 1e-5 * max(1.0, abs(z))
    forward = np.asarray(log_char_batch(s, m, z + h))
    backward = np.asarray(log_char_batch(s, m, z - h))
    return _reduce((forward - backward) / (2 * h))
