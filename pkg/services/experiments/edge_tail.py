"""
谱边外的尾概率
P(x) = P(∃k: λ_k ∉ [A − x N^{-2/3}, B + x N^{-2/3}])，预测 −log(P(x)/P(0)) ≈ c·x^p
"""
from typing import List, Sequence, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import BaseExperiment, ExperimentContext, mcmc_notes
from utils.stats import loglog_slope, wilson_interval


def edge_tail(
    samples: SampleSet,
    m: EquilibriumMeasure,
    xs: Sequence[float],
    exponent_low: float = 0.7,
    exponent_high: float = 1.7,
) -> ExperimentReport:
    """
    Args:
        samples: 样本集合
        m: 平衡测度
        xs: 以 N^{-2/3} 为单位的距离，0 <= x <= N^{2/3}
        exponent_low: 指数窗口下界
        exponent_high: 指数窗口上界

    Returns:
        ExperimentReport
    """
    N = samples.config.N
    xs = sorted(float(x) for x in xs)
    if not xs or xs[0] < 0 or xs[-1] > N ** (2.0 / 3.0):
        raise ValueError(f"xs 必须在 [0, N^(2/3)] 内: {xs}")

    report = ExperimentReport(name="edge-tail", claim=EdgeTailExperiment.claim)
    lam = samples.matrix()
    n = len(lam)
    scale = N ** (-2.0 / 3.0)
    probabilities: List[float] = []
    for x in xs:
        outside = (lam[:, 0] < m.A - x * scale) | (lam[:, -1] > m.B + x * scale)
        hits = int(outside.sum())
        p = hits / n
        low, high = wilson_interval(hits, n)
        probabilities.append(p)
        row = report.add_info("survival", p, {"x": x, "hits": hits, "n": n})
        row.inputs.update({"wilson_low": low, "wilson_high": high})

    # 嵌套事件：估计值不增；落在 (0,1) 内的估计严格递减
    probs = np.asarray(probabilities)
    non_increasing = bool(np.all(np.diff(probs) <= 0))
    interior = probs[(probs > 0) & (probs < 1)]
    strictly = bool(np.all(np.diff(interior) < 0)) if len(interior) > 1 else True
    report.add_check("survival_monotone", non_increasing and strictly, {"xs": xs})

    # 指数拟合：log(−log(P(x)/P(0))) = log c + p·log x
    if xs[0] == 0 and probs[0] > 0:
        mask = (np.asarray(xs) > 0) & (probs > 0) & (probs < probs[0])
        fit_x = np.asarray(xs)[mask]
        fit_y = -np.log(probs[mask] / probs[0])
        if len(fit_x) >= 2:
            p_hat, p_err = loglog_slope(fit_x, fit_y)
            report.add_window_row("exponent", p_hat, exponent_low, exponent_high, {"points": len(fit_x)}, stderr=p_err)
        else:
            report.notes["exponent"] = "fewer than two usable points"
    report.notes.update(mcmc_notes(samples))
    return report


class EdgeTailParams(BaseModel):
    """edge-tail 参数"""

    model_config = ConfigDict(extra="forbid")

    xs: List[float] = Field(default=[0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0])
    exponent_low: float = 0.7
    exponent_high: float = 1.7


class EdgeTailExperiment(BaseExperiment):
    """谱边尾概率"""

    experiment_id: str = "edge-tail"
    experiment_name: str = "谱边尾概率"
    claim: str = "P(some l_k outside [A - x N^(-2/3), B + x N^(-2/3)]) <= C exp(-c x^(3/4))"

    @property
    def params_model(self) -> Type[BaseModel]:
        return EdgeTailParams

    def run(self, context: ExperimentContext, params: EdgeTailParams) -> ExperimentReport:
        return edge_tail(
            context.sample_set(),
            context.measure,
            params.xs,
            params.exponent_low,
            params.exponent_high,
        )


edge_tail_experiment = EdgeTailExperiment()
