"""
刚性
每个 N 上统计 max_{k ∈ bulk} N^{2/3} k̂^{1/3} |λ_k − γ_k| / log N 的样本分位数，
结论为该序列随 N 有界
"""
from typing import Dict, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import BaseExperiment, ExperimentContext, mcmc_notes


def rigidity_statistic(lam: np.ndarray, m: EquilibriumMeasure, bulk_fraction: float) -> np.ndarray:
    """
    每个样本的归一化最大位移

    Args:
        lam: (样本数, N) 特征值矩阵
        m: 平衡测度
        bulk_fraction: 两端各去掉的比例，k ∈ [⌈fN⌉, N − ⌈fN⌉]

    Returns:
        长度为样本数的数组
    """
    N = lam.shape[1]
    a = max(1, int(np.ceil(bulk_fraction * N)))
    k = np.arange(a, N - a + 1)
    if len(k) == 0:
        raise ValueError(f"bulk_fraction={bulk_fraction} 在 N={N} 时没有剩余的下标")
    gamma = m.quantiles(N)[k - 1]
    k_hat = np.minimum(k, N + 1 - k)
    scale = N ** (2.0 / 3.0) * k_hat ** (1.0 / 3.0) / np.log(N)
    return (np.abs(lam[:, k - 1] - gamma[None, :]) * scale[None, :]).max(axis=1)


def rigidity_profile(
    sample_sets: Dict[int, SampleSet],
    m: EquilibriumMeasure,
    bulk_fraction: float = 0.1,
    quantile: float = 0.99,
    max_ratio: float = 2.0,
) -> ExperimentReport:
    """
    Args:
        sample_sets: N -> 样本集合（N 严格递增）
        m: 平衡测度
        bulk_fraction: (0, 0.5)
        quantile: 报告的样本分位数
        max_ratio: 各 N 常数之间允许的最大比值

    Returns:
        ExperimentReport
    """
    if not 0 < bulk_fraction < 0.5:
        raise ValueError("bulk_fraction 必须在 (0, 0.5) 内")
    Ns = sorted(sample_sets)
    if any(n < 2 for n in Ns):
        raise ValueError("N 必须不小于 2")

    report = ExperimentReport(name="rigidity", claim=RigidityExperiment.claim)
    constants = []
    for N in Ns:
        values = rigidity_statistic(sample_sets[N].matrix(), m, bulk_fraction)
        constant = float(np.quantile(values, quantile))
        constants.append(constant)
        report.add_info("constant", constant, {"N": N, "quantile": quantile, "bulk_fraction": bulk_fraction})
        if not sample_sets[N].iid:
            report.notes[f"N={N}"] = mcmc_notes(sample_sets[N], values)

    ratio = max(constants) / min(constants) if min(constants) > 0 else float("inf")
    report.add_window_row("max_ratio", ratio, None, max_ratio, {"Ns": Ns})
    return report


class RigidityParams(BaseModel):
    """rigidity 参数"""

    model_config = ConfigDict(extra="forbid")

    bulk_fraction: float = Field(default=0.1, gt=0, lt=0.5)
    quantile: float = Field(default=0.99, gt=0, lt=1)
    max_ratio: float = Field(default=2.0, ge=1)


class RigidityExperiment(BaseExperiment):
    """刚性"""

    experiment_id: str = "rigidity"
    experiment_name: str = "刚性"
    claim: str = "max_k |l_k - g_k| <= C (log N) N^(-2/3) k^(-1/3) with overwhelming probability"

    @property
    def params_model(self) -> Type[BaseModel]:
        return RigidityParams

    def run(self, context: ExperimentContext, params: RigidityParams) -> ExperimentReport:
        sample_sets = {N: context.sample_set(N) for N in context.run.Ns}
        return rigidity_profile(sample_sets, context.measure, params.bulk_fraction, params.quantile, params.max_ratio)


rigidity_experiment = RigidityExperiment()
