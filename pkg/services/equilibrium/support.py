"""
支撑区间求解
端点方程：
    (1/2π) ∫_A^B V'(t) / τ(t) dt = 0
    (1/2π) ∫_A^B t·V'(t) / τ(t) dt = 1
两式恰好保证 m_V = −V'/2 + r·b 在无穷远处 ~ −1/z
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from models.potential import Potential
from services.potential import evaluate
from utils.exceptions import ConvergenceError
from utils.logger import get_logger
from utils.quadrature import chebyshev_first_kind

logger = get_logger(__name__)

MAX_ITERATIONS = 100


class SupportInterval(BaseModel):
    """支撑区间 [A,B]"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    A: float
    B: float

    @model_validator(mode="after")
    def _ordered(self) -> "SupportInterval":
        if not self.A < self.B:
            raise ValueError(f"需要 A < B，当前 A={self.A}, B={self.B}")
        return self

    @property
    def center(self) -> float:
        return 0.5 * (self.A + self.B)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.B - self.A)


@dataclass(frozen=True)
class SupportSolution:
    """端点牛顿迭代结果"""

    support: SupportInterval
    iterations: int
    residual: float


def quad_order(p: Potential) -> int:
    """Gauss-Chebyshev 节点数：max(64, 4·deg V)"""
    return max(64, 4 * p.degree)


def _residual_and_jacobian(p: Potential, c: float, d: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, _ = chebyshev_first_kind(-1.0, 1.0, n)
    t = c + d * x
    v1 = evaluate(p, t, 1)
    v2 = evaluate(p, t, 2)
    # 权重 π/n，再乘 1/2π
    scale = 0.5 / n
    residual = np.array([scale * v1.sum(), scale * (t * v1).sum() - 1.0])
    g = v1 + t * v2
    jacobian = scale * np.array([[v2.sum(), (v2 * x).sum()], [g.sum(), (g * x).sum()]])
    return residual, jacobian


def real_critical_points(p: Potential) -> np.ndarray:
    """V' 的实根（升序）"""
    crit = np.roots(p.derivative_coeffs[1][::-1])
    scale = max(1.0, float(np.max(np.abs(crit)))) if len(crit) else 1.0
    return np.sort(crit[np.abs(crit.imag) < 1e-7 * scale].real)


def default_guess(p: Potential) -> SupportInterval:
    """
    初始猜测：区间覆盖 V 的全部实临界点（偶势关于 0 对称），
    半宽从临界点跨度的一半起在几何网格上放大，取第一个使第二个端点方程非负的值

    Args:
        p: 外势

    Returns:
        SupportInterval
    """
    real = real_critical_points(p)
    if len(real):
        c = 0.5 * float(real[0] + real[-1])
        spread = 0.5 * float(real[-1] - real[0])
    else:
        c, spread = 0.0, 0.0
    if np.all(p.coeffs[1::2] == 0):
        c = 0.0
    n = quad_order(p)
    start = max(spread, 2.0**-8)
    for d in start * 2.0 ** np.arange(0, 20):
        if _residual_and_jacobian(p, c, d, n)[0][1] >= 0:
            return SupportInterval(A=c - d, B=c + d)
    return SupportInterval(A=c - 2.0 - spread, B=c + 2.0 + spread)


def solve_support(
    p: Potential,
    guess: Optional[SupportInterval] = None,
    tol: float = 1e-12,
) -> SupportSolution:
    """
    二维牛顿法求解端点方程（阻尼：残差不降则步长减半）

    Args:
        p: 外势
        guess: 初始区间，缺省由 default_guess 给出
        tol: 两个方程残差的上界

    Returns:
        SupportSolution
    """
    if tol <= 0:
        raise ValueError("tol 必须为正")
    guess = guess or default_guess(p)
    n = quad_order(p)
    c, d = guess.center, guess.half_width

    residual, jacobian = _residual_and_jacobian(p, c, d, n)
    res = float(np.max(np.abs(residual)))
    for iteration in range(1, MAX_ITERATIONS + 1):
        if res < tol:
            logger.debug(f"{p.label()} 端点收敛: iterations={iteration}, residual={res:.2e}")
            return SupportSolution(SupportInterval(A=c - d, B=c + d), iteration, res)

        if not np.all(np.isfinite(jacobian)) or abs(np.linalg.det(jacobian)) < 1e-300:
            raise ConvergenceError("端点牛顿迭代的 Jacobian 奇异", res, iteration)
        try:
            delta = np.linalg.solve(jacobian, -residual)
        except np.linalg.LinAlgError as e:
            raise ConvergenceError(f"端点牛顿迭代的 Jacobian 奇异: {e}", res, iteration) from e

        step = 1.0
        while step >= 2.0**-30:
            c_new, d_new = c + step * delta[0], d + step * delta[1]
            if d_new > 0:
                r_new, j_new = _residual_and_jacobian(p, c_new, d_new, n)
                res_new = float(np.max(np.abs(r_new)))
                if res_new < res:
                    break
            step *= 0.5
        else:
            raise ConvergenceError("阻尼牛顿步无法降低残差", res, iteration)

        c, d, residual, jacobian, res = c_new, d_new, r_new, j_new, res_new

    raise ConvergenceError("端点牛顿迭代超过最大次数", res, MAX_ITERATIONS)
