"""
局部律
E|s_N(z) − m_V(z)|^{2q} 随 η 的标度，z = E + iη；预测 log-log 斜率为 −2q
"""
from typing import List, Optional, Sequence, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import BaseExperiment, ExperimentContext, mc_estimate, mcmc_notes
from services.observables import stieltjes_emp
from utils.exceptions import ExperimentError
from utils.stats import loglog_slope

MAX_ETA = 0.5
MIN_POINTS = 4


def default_etas(N: int) -> List[float]:
    """[4/N, 256/N] 上对数等距的 6 个点"""
    return np.geomspace(4.0 / N, 256.0 / N, 6).tolist()


def local_law_scan(
    samples: SampleSet,
    m: EquilibriumMeasure,
    E: float,
    etas: Sequence[float],
    q: int = 1,
    slope_tolerance: float = 0.1,
    max_eta: float = MAX_ETA,
) -> ExperimentReport:
    """
    Args:
        samples: 样本集合
        m: 平衡测度
        E: 能量
        etas: η 列表（0 < η <= max_eta）
        q: 矩的阶数（统计量为 2q 次方）
        slope_tolerance: 斜率相对误差窗口（|斜率 + 2q| <= tolerance·2q）
        max_eta: η 上限

    Returns:
        ExperimentReport
    """
    etas = sorted(float(eta) for eta in etas)
    if len(etas) < MIN_POINTS:
        raise ExperimentError(f"至少需要 {MIN_POINTS} 个 η，当前 {len(etas)} 个")
    if etas[0] <= 0 or etas[-1] > max_eta:
        raise ValueError(f"η 必须在 (0, {max_eta}] 内")
    if q < 1:
        raise ValueError("q 必须为正整数")
    if not m.A - etas[0] <= E <= m.B + etas[0]:
        raise ValueError(f"E={E} 超出 [A−η, B+η]")

    report = ExperimentReport(name="local-law", claim=LocalLawExperiment.claim)
    lam = samples.matrix()
    estimates = []
    for eta in etas:
        z = complex(E, eta)
        deviation = np.abs(np.asarray(stieltjes_emp(lam, z)) - complex(m.stieltjes(z))) ** (2 * q)
        estimate = mc_estimate(samples, deviation)
        estimates.append(estimate.mean)
        report.add_info(f"moment{2 * q}", estimate.mean, {"E": E, "eta": eta, "q": q}, stderr=estimate.stderr)

    slope, slope_err = loglog_slope(etas, estimates)
    predicted = -2.0 * q
    width = slope_tolerance * 2 * q
    report.add_window_row(
        "slope",
        slope,
        predicted - width,
        predicted + width,
        {"E": E, "q": q, "points": len(etas)},
        predicted=predicted,
        stderr=slope_err,
    )
    report.notes.update(mcmc_notes(samples))
    return report


class LocalLawParams(BaseModel):
    """local-law 参数"""

    model_config = ConfigDict(extra="forbid")

    E: float = 0.0
    etas: Optional[List[float]] = Field(default=None, description="缺省为 2^k N^{-2/3}，k = −2..3")
    q: int = Field(default=1, ge=1)
    slope_tolerance: float = Field(default=0.1, gt=0)
    max_eta: float = Field(default=MAX_ETA, gt=0)


class LocalLawExperiment(BaseExperiment):
    """局部律"""

    experiment_id: str = "local-law"
    experiment_name: str = "局部律"
    claim: str = "E|s_N(z) - m_V(z)|^q <= (Cq)^(q/2) / (N eta)^q down to the optimal scale"

    @property
    def params_model(self) -> Type[BaseModel]:
        return LocalLawParams

    def run(self, context: ExperimentContext, params: LocalLawParams) -> ExperimentReport:
        N = context.run.single_N()
        etas = params.etas or default_etas(N)
        return local_law_scan(
            context.sample_set(N),
            context.measure,
            params.E,
            etas,
            params.q,
            params.slope_tolerance,
            params.max_eta,
        )


local_law_experiment = LocalLawExperiment()
