"""
线性统计量的极限方差 σ²(f) 与均值 δ(f)

σ²(f) = (1/(π²β)) ∫∫ f'(s) (f(s) − f(t))/(s − t) · τ(s)/τ(t) ds dt
δ(f)  = (2/β − 1) [ (f(A) + f(B))/4 − (1/(2π²)) ∫ f(x)/τ(x) (π + p.v.∫ ψ(s)/(x − s) ds) dx ]，ψ = r'τ/r
"""
from dataclasses import dataclass
from typing import Callable, Dict, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from services.equilibrium import EquilibriumMeasure
from utils.exceptions import QuadratureError
from utils.quadrature import chebyshev_first_kind, chebyshev_second_kind

RealFunction = Callable[[np.ndarray], np.ndarray]

SIGMA2_START = 64
SIGMA2_MAX = 2048
DELTA_START = 64
DELTA_MAX = 1024
REFINEMENT_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class SmoothFunction:
    """检验函数 f 及其导数 f'（都需向量化）"""

    name: str
    f: RealFunction
    df: RealFunction

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.f(x)

    def scaled(self, c: float) -> "SmoothFunction":
        return SmoothFunction(f"{c:g}*{self.name}", lambda x: c * self.f(x), lambda x: c * self.df(x))

    def __add__(self, other: "SmoothFunction") -> "SmoothFunction":
        return SmoothFunction(
            f"{self.name}+{other.name}",
            lambda x: self.f(x) + other.f(x),
            lambda x: self.df(x) + other.df(x),
        )


def _bump(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    safe = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe**2)), 0.0)


def _bump_derivative(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    safe = np.where(inside, x, 0.0)
    return np.where(inside, _bump(safe) * (-2.0 * safe / (1.0 - safe**2) ** 2), 0.0)


SMOOTH_FUNCTIONS: Dict[str, SmoothFunction] = {
    "x": SmoothFunction("x", lambda x: np.asarray(x, dtype=float), lambda x: np.ones_like(np.asarray(x, dtype=float))),
    "x2": SmoothFunction("x2", lambda x: np.asarray(x, dtype=float) ** 2, lambda x: 2.0 * np.asarray(x, dtype=float)),
    "cos": SmoothFunction("cos", np.cos, lambda x: -np.sin(x)),
    "bump": SmoothFunction("bump", _bump, _bump_derivative),
}


def get_function(name: str) -> SmoothFunction:
    """按名称取检验函数"""
    func = SMOOTH_FUNCTIONS.get(name)
    if func is None:
        raise ValueError(f"未知的检验函数: {name}（可选 {', '.join(sorted(SMOOTH_FUNCTIONS))}）")
    return func


def log_field(points: Sequence[complex], a: Sequence[float], b: Sequence[float]) -> SmoothFunction:
    """
    f(x) = Σ a_ℓ Re log(z_ℓ − x) + b_ℓ Im log(z_ℓ − x)，z_ℓ 在上半平面

    Args:
        points: z_ℓ
        a: 实部系数
        b: 虚部系数

    Returns:
        SmoothFunction
    """
    zs = np.asarray(points, dtype=complex)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (len(zs) == len(a) == len(b)):
        raise ValueError("points、a、b 的长度必须一致")
    if np.any(zs.imag <= 0):
        raise ValueError("log-field 的求值点必须在上半平面")

    def f(x):
        logs = np.log(zs[None, :] - np.asarray(x, dtype=float)[..., None])
        return (logs.real * a).sum(axis=-1) + (logs.imag * b).sum(axis=-1)

    def df(x):
        inv = 1.0 / (np.asarray(x, dtype=float)[..., None] - zs[None, :])
        return (inv.real * a).sum(axis=-1) + (inv.imag * b).sum(axis=-1)

    return SmoothFunction("log-field", f, df)


# ============================================
# σ²(f)
# ============================================

def _sigma2_at(m: EquilibriumMeasure, f: SmoothFunction, beta: float, n: int) -> float:
    t, wt = chebyshev_first_kind(m.A, m.B, n)
    s, ws = chebyshev_second_kind(m.A, m.B, n)
    fs, dfs, ft = f.f(s), f.df(s), f.f(t)
    diff = s[:, None] - t[None, :]
    close = np.abs(diff) < 1e-14 * (m.B - m.A)
    quotient = np.where(close, dfs[:, None], (fs[:, None] - ft[None, :]) / np.where(close, 1.0, diff))
    return float((ws * dfs) @ quotient @ wt / (np.pi**2 * beta))


def sigma2_quadrature(m: EquilibriumMeasure, f: SmoothFunction, beta: float) -> float:
    """
    双重 Gauss-Chebyshev（t 用第一类，s 用第二类），节点数从 64 倍增到 2048，
    相邻两次相对差 <= 1e-6 时返回

    Args:
        m: 平衡测度
        f: 检验函数
        beta: β

    Returns:
        σ²(f)
    """
    if beta <= 0:
        raise ValueError("beta 必须为正")
    n = SIGMA2_START
    coarse = _sigma2_at(m, f, beta, n)
    while n < SIGMA2_MAX:
        n *= 2
        fine = _sigma2_at(m, f, beta, n)
        if abs(fine - coarse) <= REFINEMENT_RTOL * max(abs(fine), 1.0):
            return fine
        coarse = fine
    raise QuadratureError(f"σ²({f.name}) 在 {SIGMA2_MAX} 个节点内未收敛", coarse, fine)


# ============================================
# δ(f)
# ============================================

def _psi(m: EquilibriumMeasure, dr: np.ndarray, s):
    s = np.asarray(s, dtype=float)
    return P.polyval(s, dr) * m.tau(s) / np.real(m.r_of(s))


def _principal_value(m: EquilibriumMeasure, dr: np.ndarray, x: float) -> float:
    """p.v. ∫ ψ(s)/(x − s) ds = ∫ (ψ(s) − ψ(x))/(x − s) ds + ψ(x) log((x−A)/(B−x))"""
    px = float(_psi(m, dr, x))

    def regular(s: float) -> float:
        return (float(_psi(m, dr, s)) - px) / (x - s)

    value, _ = integrate.quad(regular, m.A, m.B, points=[x], limit=200)
    return value + px * np.log((x - m.A) / (m.B - x))


def _delta_integral(m: EquilibriumMeasure, f: SmoothFunction, dr: np.ndarray, n: int) -> float:
    x, w = chebyshev_first_kind(m.A, m.B, n)
    if np.any(dr):
        inner = np.array([_principal_value(m, dr, xi) for xi in x])
    else:
        inner = np.zeros_like(x)
    return float(np.sum(w * f.f(x) * (np.pi + inner)))


def delta_quadrature(m: EquilibriumMeasure, f: SmoothFunction, beta: float) -> float:
    """
    外层第一类 Gauss-Chebyshev，内层主值积分用减法正则化后自适应积分；
    节点数从 64 倍增到 1024，相邻两次相对差 <= 1e-6 时返回

    Args:
        m: 平衡测度
        f: 检验函数
        beta: β

    Returns:
        δ(f)（β = 2 时恒为 0）
    """
    if beta <= 0:
        raise ValueError("beta 必须为正")
    factor = 2.0 / beta - 1.0
    if factor == 0:
        return 0.0
    dr = P.polyder(np.asarray(m.r_coeffs, dtype=float))
    endpoints = 0.25 * float(f.f(np.array([m.A]))[0] + f.f(np.array([m.B]))[0])

    n = DELTA_START
    coarse = factor * (endpoints - _delta_integral(m, f, dr, n) / (2 * np.pi**2))
    while n < DELTA_MAX:
        n *= 2
        fine = factor * (endpoints - _delta_integral(m, f, dr, n) / (2 * np.pi**2))
        if abs(fine - coarse) <= REFINEMENT_RTOL * max(abs(fine), 1.0):
            return fine
        coarse = fine
    raise QuadratureError(f"δ({f.name}) 在 {DELTA_MAX} 个节点内未收敛", coarse, fine)
