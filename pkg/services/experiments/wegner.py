"""
Wegner 型估计
I = [E − δ ℓ(E), E + δ ℓ(E)]，E[𝒩(I)] 随 δ → 0 趋于 0
"""
from typing import List, Sequence, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import BaseExperiment, ExperimentContext, mc_estimate, mcmc_notes
from services.observables import count_interval, rescaled_points

# 统计局部间距时最多使用的样本数
GAP_SAMPLE_LIMIT = 200


def wegner_scan(
    samples: SampleSet,
    m: EquilibriumMeasure,
    E: float,
    deltas: Sequence[float],
    margin: float = 0.5,
) -> ExperimentReport:
    """
    Args:
        samples: 样本集合
        m: 平衡测度
        E: 能量
        deltas: 严格递减的 δ 列表
        margin: 上界 4δ + margin 中的余量

    Returns:
        ExperimentReport
    """
    deltas = [float(d) for d in deltas]
    if not deltas or any(d <= 0 for d in deltas):
        raise ValueError("deltas 必须为正")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas 必须严格递减")

    N = samples.config.N
    ell = m.scales(E, N).ell
    lam = samples.matrix()
    report = ExperimentReport(name="wegner", claim=WegnerExperiment.claim)

    means: List[float] = []
    for delta in deltas:
        counts = count_interval(lam, E - delta * ell, E + delta * ell)
        estimate = mc_estimate(samples, counts)
        means.append(estimate.mean)
        report.add_window_row(
            "mean_count",
            estimate.mean,
            None,
            4 * delta + margin,
            {"E": E, "delta": delta, "ell": ell},
            stderr=estimate.stderr,
        )
    report.add_check("mean_count_monotone", bool(np.all(np.diff(means) <= 0)), {"deltas": deltas})

    # 局部间距（以 ℓ 为单位），只报告
    gaps = []
    for row in lam[:GAP_SAMPLE_LIMIT]:
        points = rescaled_points(row, E, ell)
        if len(points) >= 2:
            gaps.append(np.diff(points))
    if gaps:
        gaps = np.concatenate(gaps)
        report.add_info("local_gap.mean", float(gaps.mean()), {"E": E, "window": 5.0})
        report.add_info("local_gap.min", float(gaps.min()), {"E": E, "window": 5.0})
    report.notes.update(mcmc_notes(samples))
    return report


class WegnerParams(BaseModel):
    """wegner 参数"""

    model_config = ConfigDict(extra="forbid")

    E: float = 0.0
    deltas: List[float] = Field(default=[0.5, 0.2, 0.1, 0.05])
    margin: float = Field(default=0.5, ge=0)


class WegnerExperiment(BaseExperiment):
    """Wegner 估计"""

    experiment_id: str = "wegner"
    experiment_name: str = "Wegner 估计"
    claim: str = "E[N(I)] -> 0 for I = [E - d l(E), E + d l(E)] as d -> 0"

    @property
    def params_model(self) -> Type[BaseModel]:
        return WegnerParams

    def run(self, context: ExperimentContext, params: WegnerParams) -> ExperimentReport:
        return wegner_scan(context.sample_set(), context.measure, params.E, params.deltas, params.margin)


wegner_experiment = WegnerExperiment()
