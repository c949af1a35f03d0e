"""
小 N（N <= 3）的精确期望
在有序单纯形 λ_1 < … < λ_N 上做张量复合 Gauss-Legendre 求积：
    λ_1 ∈ [−T, T]，λ_{k+1} = λ_k + (T − λ_k) u_k，u_k ∈ [0, 1]
Jacobian 为 Π (T − λ_k)；差积全为正，被积函数在面板内光滑。
N! 对称因子在比值 ∫g·w / ∫w 中约去。
"""
import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.potential import Potential
from services.observables import loop_residual_rank1
from services.potential import evaluate
from utils.exceptions import OracleError
from utils.logger import get_logger
from utils.quadrature import composite_gauss_legendre

logger = get_logger(__name__)

DEFAULT_GRID = {1: 512, 2: 256, 3: 96}
PANEL_ORDER = 8
REFINEMENT_RTOL = 1e-6
BOUNDARY_RATIO = 1e-14
# V(T) − V_min >= TRUNCATION_EXPONENT / (βN/2)
TRUNCATION_EXPONENT = 80.0

Observable = Callable[[np.ndarray], np.ndarray]
Number = Union[float, complex]


class OracleSpec(BaseModel):
    """精确积分的参数"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: float = Field(gt=0)
    N: int = Field(ge=1, le=3)
    potential: Potential
    truncation: Optional[float] = Field(default=None, gt=0, description="积分盒半宽 T，缺省自动选取")
    grid: Optional[int] = Field(default=None, ge=PANEL_ORDER, description="每个轴的节点数")

    def resolved_truncation(self) -> float:
        return self.truncation or default_truncation(self.potential, self.beta, self.N)

    def resolved_grid(self) -> int:
        return self.grid or DEFAULT_GRID[self.N]


@dataclass(frozen=True)
class OracleResult:
    """精确期望与网格加密误差"""

    value: Number
    error: float
    coarse: Number
    fine: Number
    grid: int
    truncation: float

    def to_dict(self) -> dict:
        def encode(x: Number):
            if isinstance(x, complex):
                return {"re": x.real, "im": x.imag}
            return x

        return {
            "value": encode(self.value),
            "error": self.error,
            "coarse": encode(self.coarse),
            "fine": encode(self.fine),
            "grid": self.grid,
            "truncation": self.truncation,
        }


def _potential_minimum(p: Potential) -> Tuple[float, float]:
    """(V 的全局极小值, 临界点的最大绝对值)"""
    crit = np.roots(np.polynomial.polynomial.polyder(p.coeffs)[::-1])
    real = crit[np.abs(crit.imag) < 1e-9].real
    if not len(real):
        return float(evaluate(p, 0.0, 0)), 0.0
    return float(np.min(evaluate(p, real, 0))), float(np.max(np.abs(real)))


def default_truncation(p: Potential, beta: float, N: int) -> float:
    """
    最小的 T（按 1.05 倍增长）使 min(V(T), V(−T)) − V_min >= 80 / (βN/2)

    Args:
        p: 外势
        beta: β
        N: 粒子数

    Returns:
        T
    """
    vmin, reach = _potential_minimum(p)
    threshold = TRUNCATION_EXPONENT / (0.5 * beta * N)
    T = max(1.0, reach + 1.0)
    while min(evaluate(p, T, 0), evaluate(p, -T, 0)) - vmin < threshold:
        T *= 1.05
    return float(T)


def _log_density(lam: np.ndarray, p: Potential, beta: float) -> np.ndarray:
    """有序构型的非归一化对数密度"""
    N = lam.shape[-1]
    out = -0.5 * beta * N * evaluate(p, lam, 0).sum(axis=-1)
    for i, j in itertools.combinations(range(N), 2):
        out = out + beta * np.log(lam[..., j] - lam[..., i])
    return out


def _simplex_chunks(N: int, T: float, grid: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """
    按 λ_1 节点逐块产出 (构型矩阵, log(求积权重 × Jacobian))
    """
    x, wx = composite_gauss_legendre(-T, T, grid, PANEL_ORDER)
    u, wu = composite_gauss_legendre(0.0, 1.0, grid, PANEL_ORDER)
    log_wu = np.log(wu)
    K = len(u)
    for a, wa in zip(x, wx):
        cols = [np.array([a])]
        log_w = np.array([np.log(wa)])
        for _ in range(N - 1):
            prev = cols[-1]
            new = prev[:, None] + (T - prev)[:, None] * u[None, :]
            log_w = ((log_w + np.log(T - prev))[:, None] + log_wu[None, :]).ravel()
            cols = [np.repeat(c, K) for c in cols] + [new.ravel()]
        yield np.column_stack(cols), log_w


def _integrate(spec: OracleSpec, g: Observable, grid: int, symmetrize: bool) -> Tuple[Number, float, float]:
    """
    Returns:
        (E[g], E[|g|], 边界面板相对峰值的密度比)
    """
    T = spec.resolved_truncation()
    N = spec.N
    edge = T - 2 * T / max(1, grid // PANEL_ORDER)
    perms = list(itertools.permutations(range(N))) if symmetrize else None

    ref = -np.inf
    sum_w = 0.0
    sum_gw: Number = 0.0
    sum_abs = 0.0
    peak = -np.inf
    boundary = -np.inf
    for lam, log_quad in _simplex_chunks(N, T, grid):
        log_dens = _log_density(lam, spec.potential, spec.beta)
        peak = max(peak, float(log_dens.max()))
        at_edge = np.abs(lam).max(axis=1) >= edge
        if np.any(at_edge):
            boundary = max(boundary, float(log_dens[at_edge].max()))

        log_w = log_dens + log_quad
        chunk_max = float(log_w.max())
        if chunk_max > ref:
            scale = np.exp(ref - chunk_max) if np.isfinite(ref) else 0.0
            sum_w *= scale
            sum_gw *= scale
            sum_abs *= scale
            ref = chunk_max
        w = np.exp(log_w - ref)

        if perms is None:
            values = np.asarray(g(lam))
        else:
            values = sum(np.asarray(g(lam[:, list(perm)])) for perm in perms) / len(perms)
        sum_w += float(w.sum())
        sum_gw = sum_gw + (w * values).sum()
        sum_abs += float((w * np.abs(values)).sum())

    mean = sum_gw / sum_w
    mean = complex(mean) if np.iscomplexobj(mean) else float(mean)
    return mean, sum_abs / sum_w, float(np.exp(boundary - peak)) if np.isfinite(boundary) else 0.0


def exact_expectation(spec: OracleSpec, g: Observable, sorted: bool = True) -> OracleResult:
    """
    E[g] = ∫ g·w / ∫ w，在 grid 与 2·grid 两套网格上计算

    Args:
        spec: 积分参数
        g: 观测量，输入 (M, N) 构型矩阵，返回长度 M 的实数或复数数组
        sorted: True 时 g 作用于升序构型；False 时对所有粒子标号取平均

    Returns:
        OracleResult（value 为细网格结果）
    """
    grid = spec.resolved_grid()
    T = spec.resolved_truncation()
    coarse, _, ratio = _integrate(spec, g, grid, not sorted)
    if ratio > BOUNDARY_RATIO:
        raise OracleError(f"截断 T={T:g} 过小：边界密度与峰值之比 {ratio:.2e}", coarse, coarse)
    fine, magnitude, _ = _integrate(spec, g, 2 * grid, not sorted)

    error = abs(fine - coarse)
    relative = error / magnitude if magnitude > 0 else 0.0
    if relative > REFINEMENT_RTOL:
        raise OracleError(f"网格加密结果不一致: 相对差 {relative:.2e}", coarse, fine)

    logger.debug(f"oracle N={spec.N} beta={spec.beta:g} grid={grid}: {fine} ± {error:.2e}")
    return OracleResult(value=fine, error=error, coarse=coarse, fine=fine, grid=grid, truncation=T)


# ============================================
# 命名观测量
# ============================================

def _loop1(spec: OracleSpec) -> Observable:
    return lambda lam: loop_residual_rank1(lam, spec.potential, spec.beta, 1j)


def _gap2(spec: OracleSpec) -> Observable:
    if spec.N < 2:
        raise ValueError("gap2 需要 N >= 2")
    return lambda lam: (lam[:, 1] - lam[:, 0]) ** 2


OBSERVABLES: Dict[str, Callable[[OracleSpec], Observable]] = {
    "trace": lambda spec: lambda lam: lam.sum(axis=1),
    "trace2": lambda spec: lambda lam: (lam**2).sum(axis=1),
    "lambda_max": lambda spec: lambda lam: lam[:, -1],
    "gap2": _gap2,
    "loop1": _loop1,
}


def named_observable(name: str, spec: OracleSpec) -> Observable:
    """
    按名称取观测量：trace、trace2、lambda_max、gap2、loop1（z = i 处的 rank-1 loop 残差）
    """
    factory = OBSERVABLES.get(name)
    if factory is None:
        raise ValueError(f"未知的观测量: {name}（可选 {', '.join(sorted(OBSERVABLES))}）")
    return factory(spec)
