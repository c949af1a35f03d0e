"""
外势服务
求值、内置势、单割条件检查
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from models.potential import Potential, PotentialKind
from utils.exceptions import PotentialError
from utils.logger import get_logger

if TYPE_CHECKING:
    from services.equilibrium.measure import EquilibriumMeasure

logger = get_logger(__name__)

ArrayLike = Union[float, complex, np.ndarray]


def evaluate(p: Potential, x: ArrayLike, order: int = 0) -> ArrayLike:
    """
    计算 V(x)、V'(x) 或 V''(x)

    复数输入按多项式的解析延拓（Horner）计算

    Args:
        p: 外势
        x: 实数或复数（可为数组）
        order: 导数阶数，0/1/2

    Returns:
        与 x 同形状的值
    """
    if order not in (0, 1, 2):
        raise PotentialError(f"不支持的导数阶数: {order}")
    return P.polyval(x, p.derivative_coeffs[order])


def divided_difference(p: Potential, lam: ArrayLike, z: ArrayLike) -> ArrayLike:
    """
    差商 (V'(λ) − V'(z)) / (λ − z)，按多项式展开计算，λ = z 处无奇点

    Args:
        p: 外势
        lam: λ（可广播）
        z: z（可广播）

    Returns:
        广播后的值
    """
    c = p.derivative_coeffs[1]
    lam = np.asarray(lam)
    z = np.asarray(z)
    out = np.zeros(np.broadcast(lam, z).shape, dtype=np.result_type(lam, z, float))
    # z^j λ^(k-1-j) 对 j 求和
    for k in range(1, len(c)):
        if c[k] == 0:
            continue
        for j in range(k):
            out = out + c[k] * z**j * lam ** (k - 1 - j)
    return out


def builtin_quadratic() -> Potential:
    """高斯 β-系综：V(x) = x²/2"""
    return Potential(kind=PotentialKind.QUADRATIC)


def builtin_quartic(t: float) -> Potential:
    """四次势：V(x) = x⁴/4 + t·x²/2（单割性在求解平衡测度后检查）"""
    return Potential(kind=PotentialKind.QUARTIC, t=float(t))


@dataclass(frozen=True)
class OneCutCheck:
    """单割检查结果"""

    ok: bool
    min_r: float
    argmin: float
    min_excess: float = 0.0
    excess_argmin: Optional[float] = None

    @property
    def r_positive(self) -> bool:
        return self.min_r > 0

    def __bool__(self) -> bool:
        return self.ok


def effective_potential_excess(m: "EquilibriumMeasure", grid_size: int = 4096) -> Tuple[float, float]:
    """
    支撑外有效势 U(x) = V(x) − 2∫log|x−y|dμ_V(y) 相对支撑上常数值的最小超出量

    U'(x) = 2 r(x) b(x)，故 U(x) − U(B) = 2∫_B^x r·√((t−A)(t−B)) dt（右侧），左侧对称；
    扫描范围覆盖 r 与 V' 的全部实根，再向外延伸一个支撑宽度

    Returns:
        (最小超出量, 取到最小值的位置)
    """
    a, b = m.support.A, m.support.B
    width = b - a
    marks = [a, b]
    for coeffs in (np.asarray(m.r_coeffs, dtype=float), m.potential.derivative_coeffs[1]):
        trimmed = np.trim_zeros(coeffs, "b")
        if len(trimmed) > 1:
            roots = np.roots(trimmed[::-1])
            marks.extend(roots[np.abs(roots.imag) < 1e-7 * max(1.0, width)].real)
    left = min(marks) - width
    right = max(marks) + width

    best, where = 0.0, b
    for start, stop in ((b, right), (a, left)):
        t = np.linspace(start, stop, grid_size)
        slope = 2.0 * np.real(m.r_of(t)) * np.sqrt(np.clip((t - a) * (t - b), 0.0, None))
        # 左侧 b(x) < 0，且积分方向向左，两者合起来增量反号
        excess = integrate.cumulative_trapezoid(slope, t, initial=0.0) * (1.0 if stop > start else -1.0)
        i = int(np.argmin(excess))
        if excess[i] < best:
            best, where = float(excess[i]), float(t[i])
    return best, where


def check_one_cut(p: Potential, m: "EquilibriumMeasure", grid_size: int = 512, tol: float = 1e-9) -> OneCutCheck:
    """
    单割检查：r 在 [A,B] 的 Chebyshev 点上恒正，且支撑外的有效势不低于支撑上的值

    Args:
        p: 外势
        m: 对应的平衡测度
        grid_size: Chebyshev 点数
        tol: 有效势超出量允许的负偏差

    Returns:
        OneCutCheck
    """
    if m is None or m.potential != p:
        raise PotentialError("平衡测度尚未针对该势求解")

    a, b = m.support.A, m.support.B
    k = np.arange(grid_size)
    # 含端点的 Chebyshev 点
    t = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * k / max(grid_size - 1, 1))
    r = np.real(m.r_of(t))
    i = int(np.argmin(r))
    excess, where = effective_potential_excess(m)
    result = OneCutCheck(
        ok=bool(np.all(r > 0)) and excess >= -tol,
        min_r=float(r[i]),
        argmin=float(t[i]),
        min_excess=excess,
        excess_argmin=where,
    )

    if not result.r_positive:
        logger.warning(f"{p.label()} 不满足单割条件: min r = {result.min_r:.3e} at t = {result.argmin:.4f}")
    if excess < -tol:
        logger.warning(f"{p.label()} 支撑外有效势低于支撑上的值: {excess:.3e} at x = {where:.4f}")
    if p.kind == PotentialKind.POLYNOMIAL:
        logger.warning(f"{p.label()}: 有效势的全局极小性只在有限网格上检查")
    return result
