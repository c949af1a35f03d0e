"""
平衡测度
ρ_V(t) = (1/π) r(t) τ(t)，τ(t) = √((t−A)(B−t))
m_V(z) = −V'(z)/2 + r(z) b(z)，b(z) = √(z−A)√(z−B)

实轴上 [A,B] 内的点一律取上半平面极限
"""
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Hashable, NamedTuple, Optional, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, optimize

from models.potential import Potential
from services.equilibrium.support import SupportInterval, quad_order, solve_support
from services.potential import evaluate
from utils.exceptions import ConvergenceError, QuadratureError
from utils.logger import get_logger
from utils.quadrature import chebyshev_first_kind, chebyshev_second_kind, gauss_legendre

logger = get_logger(__name__)

ComplexLike = Union[complex, float, np.ndarray]

CDF_PANELS = 1024
CDF_PANEL_ORDER = 16
LOG_CHEBYSHEV_NODES = 256
# 以支撑半宽为单位的远场半径
FAR_FIELD = 2.0
EXPECT_CACHE_SIZE = 64


class Branch(str, Enum):
    """Stieltjes 变换的两个根"""

    PRINCIPAL = "principal"
    SECOND = "second"


class Scales(NamedTuple):
    """能量 E 处的尺度 κ(E)、ℓ(E)、η(E)"""

    kappa: float
    ell: float
    eta: float


def from_above(z: ComplexLike) -> np.ndarray:
    """转成复数，虚部 −0 统一改为 +0（实轴取上方极限）"""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    out.real = z.real
    out.imag = z.imag + 0.0
    return out


def b_of(s: SupportInterval, z: ComplexLike) -> np.ndarray:
    """
    b(z) = √(z−A) √(z−B)，主值平方根，负实数取 √(−x) = i√x

    Args:
        s: 支撑区间
        z: 求值点

    Returns:
        复数数组（标量输入返回 0 维数组）
    """
    z = from_above(z)
    return np.sqrt(z - s.A) * np.sqrt(z - s.B)


def _moment_coeffs(c1: np.ndarray, moments: np.ndarray) -> np.ndarray:
    """
    Σ_j z^j Σ_{k>j} c1[k] · moments[k−1−j] 的升幂系数

    用于把 ∫ (V'(z) − V'(t)) / (z − t) dν(t) 展开为 z 的多项式
    """
    deg = len(c1) - 1
    out = np.zeros(max(deg, 1))
    for j in range(deg):
        out[j] = sum(c1[k] * moments[k - 1 - j] for k in range(j + 1, deg + 1))
    return out


@dataclass(frozen=True, eq=False)
class EquilibriumMeasure:
    """已求解的平衡测度（构造后不可变）"""

    potential: Potential
    support: SupportInterval
    r_coeffs: np.ndarray
    h_coeffs: np.ndarray
    quad_order: int
    cdf_table: np.ndarray  # (角度, CDF) 两列
    _quantile_cache: Dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)
    _expect_cache: "OrderedDict[Hashable, float]" = field(default_factory=OrderedDict, repr=False, compare=False)
    _expect_lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    # ============================================
    # 基本函数
    # ============================================

    @property
    def A(self) -> float:
        return self.support.A

    @property
    def B(self) -> float:
        return self.support.B

    def r_of(self, z: ComplexLike) -> np.ndarray:
        """r(z)，系数在求解时由 Chebyshev 矩一次算出"""
        return P.polyval(np.asarray(z), self.r_coeffs)

    def b_of(self, z: ComplexLike) -> np.ndarray:
        return b_of(self.support, z)

    def tau(self, t: np.ndarray) -> np.ndarray:
        """τ(t) = √((t−A)(B−t))，区间外为 0"""
        t = np.asarray(t, dtype=float)
        return np.sqrt(np.clip((t - self.A) * (self.B - t), 0.0, None))

    def density(self, t: ComplexLike) -> np.ndarray:
        """ρ_V(t)，区间外为 0"""
        t = np.asarray(t, dtype=float)
        inside = (t > self.A) & (t < self.B)
        return np.where(inside, np.real(self.r_of(t)) * self.tau(t) / np.pi, 0.0)

    def stieltjes(self, z: ComplexLike, which: Branch = Branch.PRINCIPAL) -> np.ndarray:
        """
        m_V(z) = −V'(z)/2 + r(z) b(z)，或第二个根 m̃_V(z) = −V'(z)/2 − r(z) b(z)

        远场（|z − c| > FAR_FIELD·d）两项相消，改用 m_V = h / m̃_V（两根之积为 h）

        Args:
            z: 求值点（实轴上 [A,B] 内取上方极限）
            which: principal 或 second

        Returns:
            复数数组
        """
        z = from_above(z)
        rb = self.r_of(z) * self.b_of(z)
        half = -0.5 * evaluate(self.potential, z, 1)
        second = half - rb
        if Branch(which) == Branch.SECOND:
            return second

        principal = half + rb
        far = np.abs(z - self.support.center) > FAR_FIELD * self.support.half_width
        if np.any(far):
            h = np.asarray(self.h_of(z), dtype=complex)
            principal = np.divide(h, second, out=np.asarray(principal), where=far & (second != 0))
        return principal

    def h_of(self, z: ComplexLike) -> np.ndarray:
        """h(z) = ∫ (V'(λ) − V'(z)) / (λ − z) ρ_V(λ) dλ，z 的多项式"""
        return P.polyval(np.asarray(z), self.h_coeffs)

    def fixed_point_residual(self, z: ComplexLike) -> np.ndarray:
        """m_V(z)² + V'(z) m_V(z) + h(z)"""
        m = self.stieltjes(z)
        return m * m + evaluate(self.potential, from_above(z), 1) * m + self.h_of(z)

    # ============================================
    # 分布函数与分位点
    # ============================================

    def _angle(self, t: np.ndarray) -> np.ndarray:
        """t = c − d·cos φ 的反变换，φ ∈ [0, π]"""
        c, d = self.support.center, self.support.half_width
        return np.arccos(np.clip((c - np.asarray(t, dtype=float)) / d, -1.0, 1.0))

    def _cdf_angle_density(self, phi: np.ndarray) -> np.ndarray:
        """dF/dφ = (d²/π) r(c − d cos φ) sin²φ"""
        c, d = self.support.center, self.support.half_width
        return d * d / np.pi * np.real(self.r_of(c - d * np.cos(phi))) * np.sin(phi) ** 2

    def _cdf_from_angle(self, phi: np.ndarray) -> np.ndarray:
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        grid, values = self.cdf_table[:, 0], self.cdf_table[:, 1]
        k = np.clip(np.searchsorted(grid, phi, side="right") - 1, 0, len(grid) - 1)
        x, w = gauss_legendre(0.0, 1.0, CDF_PANEL_ORDER)
        start = grid[k]
        width = phi - start
        nodes = start[:, None] + width[:, None] * x[None, :]
        partial = (self._cdf_angle_density(nodes) * w[None, :]).sum(axis=1) * width
        return values[k] + partial

    def cdf(self, t: ComplexLike) -> np.ndarray:
        """F(t) = ∫_A^t ρ_V，由缓存表加分段 Gauss-Legendre 补齐"""
        t = np.asarray(t, dtype=float)
        out = self._cdf_from_angle(self._angle(t.ravel())).reshape(t.shape)
        out = np.where(t <= self.A, 0.0, out)
        return np.where(t >= self.B, 1.0, out)

    def quantile(self, k: int, N: int) -> float:
        """
        经典位置 γ_k：∫_{−∞}^{γ_k} dμ_V = k/N

        Args:
            k: 1 <= k <= N
            N: 粒子数

        Returns:
            γ_k（k = N 时为 B）
        """
        if not 1 <= k <= N:
            raise ValueError(f"k 超出范围: k={k}, N={N}")
        if k == N:
            return self.B
        return float(self._invert(k / N))

    def quantiles(self, N: int) -> np.ndarray:
        """γ_1, …, γ_N（按 N 缓存）"""
        cached = self._quantile_cache.get(N)
        if cached is None:
            cached = np.array([self.quantile(k, N) for k in range(1, N + 1)])
            cached.setflags(write=False)
            self._quantile_cache[N] = cached
        return cached

    def _invert(self, q: float) -> float:
        grid, values = self.cdf_table[:, 0], self.cdf_table[:, 1]
        k = int(np.clip(np.searchsorted(values, q) - 1, 0, len(grid) - 2))
        lo, hi = grid[k], grid[k + 1]

        def gap(phi: float) -> float:
            return float(self._cdf_from_angle(phi)[0]) - q

        if gap(lo) * gap(hi) > 0:
            lo, hi = 0.0, np.pi
        phi = optimize.brentq(gap, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        # 一步牛顿修正（导数即 ρ_V 在角度变量下的形式）
        slope = float(self._cdf_angle_density(np.array([phi]))[0])
        if slope > 0:
            candidate = phi - gap(phi) / slope
            if lo <= candidate <= hi and abs(gap(candidate)) < abs(gap(phi)):
                phi = candidate
        c, d = self.support.center, self.support.half_width
        return c - d * np.cos(phi)

    # ============================================
    # 尺度与积分
    # ============================================

    def scales(self, E: float, N: int) -> Scales:
        """
        κ(E) = |A−E| ∧ |B−E|
        ℓ(E) = N^{-1} κ^{-1/2}（E ∈ [A+N^{-2/3}, B−N^{-2/3}]），否则 N^{-2/3}
        η(E) = exp((log N)^{1/4}) · ℓ(E)
        """
        if N < 2:
            raise ValueError("N 必须不小于 2")
        kappa = min(abs(self.A - E), abs(self.B - E))
        edge = N ** (-2.0 / 3.0)
        if self.A + edge <= E <= self.B - edge:
            ell = 1.0 / (N * np.sqrt(kappa))
        else:
            ell = edge
        eta = np.exp(np.log(N) ** 0.25) * ell
        return Scales(float(kappa), float(ell), float(eta))

    def moments(self, k: int) -> float:
        """∫ x^k dμ_V（第二类 Chebyshev 求积，对多项式精确）"""
        n = self.quad_order + k // 2 + 1
        x, w = chebyshev_second_kind(self.A, self.B, n)
        return float(np.sum(w * x**k * np.real(self.r_of(x))) / np.pi)

    def expect(self, f: Callable[[np.ndarray], np.ndarray], key: Optional[Hashable] = None) -> float:
        """
        ∫ f dμ_V，在角度变量下做自适应积分

        结果放进容量为 EXPECT_CACHE_SIZE 的 LRU 缓存，键为 key（缺省为函数对象本身）

        Args:
            f: 向量化实函数
            key: 稳定的缓存键（如函数名）

        Returns:
            积分值
        """
        cache_key = key if key is not None else f
        with self._expect_lock:
            cached = self._expect_cache.get(cache_key)
            if cached is not None:
                self._expect_cache.move_to_end(cache_key)
                return cached
        c, d = self.support.center, self.support.half_width

        def integrand(phi: float) -> float:
            t = c - d * np.cos(phi)
            return float(f(np.array([t]))[0]) * float(self._cdf_angle_density(np.array([phi]))[0])

        value, abserr, info = integrate.quad(integrand, 0.0, np.pi, limit=400, full_output=1)[:3]
        if abserr > 1e-8 * max(1.0, abs(value)):
            raise QuadratureError("∫ f dμ_V 自适应积分未收敛", value, value + abserr)
        with self._expect_lock:
            self._expect_cache[cache_key] = value
            while len(self._expect_cache) > EXPECT_CACHE_SIZE:
                self._expect_cache.popitem(last=False)
        return value

    def log_transform(self, z: ComplexLike, method: str = "ray") -> complex:
        """
        ∫ log(z − x) dμ_V(x)，主值对数，实轴取上方极限

        method="ray": 沿竖直射线 z → z + i∞ 积分 −m_V（对带内实点同样精确）
        method="chebyshev": 256 节点第二类 Gauss-Chebyshev（z 靠近实轴时精度有限）

        Args:
            z: 单个求值点
            method: ray 或 chebyshev

        Returns:
            复数值
        """
        z = complex(from_above(z))
        if z.imag < 0:
            return np.conj(self.log_transform(np.conj(z), method))

        if method == "chebyshev":
            x, w = chebyshev_second_kind(self.A, self.B, LOG_CHEBYSHEV_NODES)
            weights = w * np.real(self.r_of(x)) / np.pi
            return complex(np.sum(weights * np.log(from_above(z - x))))
        if method != "ray":
            raise ValueError(f"未知的方法: {method}")

        # 参考点取在实轴下方，log(w − c0) 在闭上半平面内解析
        c0 = complex(self.support.center, -1.0)

        def g(t: float) -> complex:
            w = z + 1j * t
            return complex(self.stieltjes(w)) + 1.0 / (w - c0)

        re, re_err = integrate.quad(lambda t: -g(t).imag, 0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-12)
        im, im_err = integrate.quad(lambda t: g(t).real, 0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-12)
        if max(re_err, im_err) > 1e-8:
            raise QuadratureError("对数势的射线积分未收敛", complex(re, im), complex(re_err, im_err))
        return complex(np.log(z - c0) + complex(re, im))

    def __repr__(self) -> str:
        return f"<EquilibriumMeasure {self.potential.label()} [{self.A:.6f}, {self.B:.6f}]>"


def _build_cdf_table(support: SupportInterval, r_coeffs: np.ndarray) -> np.ndarray:
    c, d = support.center, support.half_width
    edges = np.linspace(0.0, np.pi, CDF_PANELS + 1)
    x, w = gauss_legendre(0.0, 1.0, CDF_PANEL_ORDER)
    width = np.diff(edges)
    nodes = edges[:-1, None] + width[:, None] * x[None, :]
    dens = d * d / np.pi * np.real(P.polyval(c - d * np.cos(nodes), r_coeffs)) * np.sin(nodes) ** 2
    panel = (dens * w[None, :]).sum(axis=1) * width
    values = np.concatenate([[0.0], np.cumsum(panel)])
    table = np.column_stack([edges, values])
    table.setflags(write=False)
    return table


def solve_equilibrium(
    p: Potential,
    guess: Optional[SupportInterval] = None,
    tol: float = 1e-12,
) -> EquilibriumMeasure:
    """
    求解平衡测度

    Args:
        p: 外势
        guess: 端点初始猜测
        tol: 端点方程残差

    Returns:
        EquilibriumMeasure
    """
    solution = solve_support(p, guess, tol)
    support = solution.support
    n = quad_order(p)
    c1 = p.derivative_coeffs[1]

    # r 的系数：第一类 Chebyshev 矩 (1/2π) ∫ t^m / τ
    t, w = chebyshev_first_kind(support.A, support.B, n)
    cheb_moments = np.array([np.sum(w * t**m) / (2 * np.pi) for m in range(len(c1))])
    r_coeffs = _moment_coeffs(c1, cheb_moments)

    # h 的系数：μ_V 的矩 ∫ t^m ρ_V（差商关于两个变量对称）
    s, ws = chebyshev_second_kind(support.A, support.B, n)
    r_at_s = P.polyval(s, r_coeffs)
    density_moments = np.array([np.sum(ws * s**m * r_at_s) / np.pi for m in range(len(c1))])
    h_coeffs = _moment_coeffs(c1, density_moments)

    r_coeffs.setflags(write=False)
    h_coeffs.setflags(write=False)
    table = _build_cdf_table(support, r_coeffs)

    total = float(table[-1, 1])
    if abs(total - 1.0) > 1e-8:
        raise ConvergenceError(f"平衡测度归一化失败: ∫ρ_V = {total:.12f}", abs(total - 1.0), solution.iterations)

    logger.info(
        f"平衡测度已求解: {p.label()} A={support.A:.10f} B={support.B:.10f} "
        f"(iterations={solution.iterations})"
    )
    return EquilibriumMeasure(
        potential=p,
        support=support,
        r_coeffs=r_coeffs,
        h_coeffs=h_coeffs,
        quad_order=n,
        cdf_table=table,
    )
