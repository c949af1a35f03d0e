"""
光滑线性统计量的 CLT
S_N(f) 的均值 → δ(f)，方差 → σ²(f)，log E[e^{tS_N(f)}] → t²σ²/2 + tδ
"""
from typing import List, Optional, Sequence, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import BaseExperiment, ExperimentContext, mc_estimate, mcmc_notes
from services.experiments.quadratures import (
    SmoothFunction,
    delta_quadrature,
    get_function,
    log_field,
    sigma2_quadrature,
)
from services.observables import linear_stat
from utils.logger import get_logger
from utils.stats import moment_z_scores

logger = get_logger(__name__)

DEFAULT_TS = (-0.5, -0.25, 0.25, 0.5)
HEAVY_TAIL_Z = 10.0


def smooth_clt(
    samples: SampleSet,
    m: EquilibriumMeasure,
    f: SmoothFunction,
    ts: Sequence[float] = DEFAULT_TS,
    z_max: float = 4.0,
) -> ExperimentReport:
    """
    Args:
        samples: 样本集合
        m: 平衡测度
        f: 检验函数
        ts: 对数矩母函数的求值点
        z_max: 均值、方差的 |z_score| 门限

    Returns:
        ExperimentReport
    """
    beta = samples.config.beta
    stats_values = np.asarray(linear_stat(samples.matrix(), m, f), dtype=float)
    sigma2 = sigma2_quadrature(m, f, beta)
    delta = delta_quadrature(m, f, beta)
    inputs = {"f": f.name}

    report = ExperimentReport(name="smooth-clt", claim=SmoothCLTExperiment.claim)
    mean = mc_estimate(samples, stats_values)
    report.add_z_row("mean", mean.mean, mean.stderr, delta, inputs, z_max)
    variance = mc_estimate(samples, (stats_values - stats_values.mean()) ** 2)
    report.add_z_row("variance", variance.mean, variance.stderr, sigma2, inputs, z_max)

    n = len(stats_values)
    for t in ts:
        weights = np.exp(t * stats_values)
        mgf = float(weights.mean())
        stderr = float(weights.std(ddof=1) / (np.sqrt(n) * mgf)) if n > 1 else None
        report.add_info("log_mgf", np.log(mgf), {**inputs, "t": t}, predicted=0.5 * t * t * sigma2 + t * delta, stderr=stderr)

    skew, kurt = moment_z_scores(stats_values)
    report.add_info("skew_z", skew, inputs)
    report.add_info("kurtosis_z", kurt, inputs)
    if kurt is not None and abs(kurt) > HEAVY_TAIL_Z:
        logger.warning(f"S_N({f.name}) 峰度检验 z = {kurt:.1f}，可能存在重尾")
        report.notes["heavy_tail"] = True

    report.notes.update({"sigma2": sigma2, "delta": delta})
    report.notes.update(mcmc_notes(samples, stats_values))
    return report


class LogFieldSpec(BaseModel):
    """log-field 检验函数"""

    model_config = ConfigDict(extra="forbid")

    points: List[Tuple[float, float]]
    a: List[float]
    b: List[float]

    @model_validator(mode="after")
    def _lengths(self) -> "LogFieldSpec":
        if not (len(self.points) == len(self.a) == len(self.b)):
            raise ValueError("points、a、b 的长度必须一致")
        return self


class SmoothCLTParams(BaseModel):
    """smooth-clt 参数"""

    model_config = ConfigDict(extra="forbid")

    function: str = Field(default="x", description="x、x2、cos、bump 或 log-field")
    log_field: Optional[LogFieldSpec] = None
    ts: List[float] = Field(default=list(DEFAULT_TS))
    z_max: float = Field(default=4.0, gt=0)

    def build_function(self) -> SmoothFunction:
        if self.function == "log-field":
            if self.log_field is None:
                raise ValueError("function=log-field 需要 log_field 参数")
            points = [complex(re, im) for re, im in self.log_field.points]
            return log_field(points, self.log_field.a, self.log_field.b)
        return get_function(self.function)


class SmoothCLTExperiment(BaseExperiment):
    """光滑线性统计量"""

    experiment_id: str = "smooth-clt"
    experiment_name: str = "光滑线性统计量 CLT"
    claim: str = "E exp(t S_N(f)) = exp(t^2 sigma^2(f)/2 + t delta(f) + o(1))"

    @property
    def params_model(self) -> Type[BaseModel]:
        return SmoothCLTParams

    def run(self, context: ExperimentContext, params: SmoothCLTParams) -> ExperimentReport:
        return smooth_clt(context.sample_set(), context.measure, params.build_function(), params.ts, params.z_max)


smooth_clt_experiment = SmoothCLTExperiment()
