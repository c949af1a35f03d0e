"""
特征值位移的联合高斯性
Y_N(n) = πN √(β/log N) ρ_V(γ_n)(λ_n − γ_n) → 𝒩(0, b)
b_ij = lim log(((|γ_i − γ_j| ∨ ℓ(γ_i)) / κ(γ_i)) ∧ 1) / (−log N)
"""
from typing import List, Optional, Sequence, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import BaseExperiment, ExperimentContext, covariance_estimate, mcmc_notes
from services.experiments.clt import MIN_SAMPLES
from services.observables import displacement
from utils.exceptions import UnderpoweredError

# 体内条件 k̂ >= N^{BULK_EXPONENT}
BULK_EXPONENT = 0.1


def finite_n_b(m: EquilibriumMeasure, indices: Sequence[int], N: int) -> np.ndarray:
    """b 的有限 N 取值（两种顺序取平均）"""
    gammas = [m.quantile(n, N) for n in indices]
    k = len(indices)
    raw = np.zeros((k, k))
    for i, gi in enumerate(gammas):
        sc = m.scales(gi, N)
        for j, gj in enumerate(gammas):
            gap = max(abs(gi - gj), sc.ell)
            ratio = gap / sc.kappa if sc.kappa > 0 else np.inf
            raw[i, j] = np.log(min(ratio, 1.0)) / -np.log(N)
    return 0.5 * (raw + raw.T)


def limit_b(indices: Sequence[int], N: int) -> np.ndarray:
    """体内下标间隔为 N^θ 时的极限 b = 1 − θ"""
    idx = np.asarray(indices, dtype=float)
    separation = np.maximum(np.abs(idx[:, None] - idx[None, :]), 1.0)
    return np.clip(1.0 - np.log(separation) / np.log(N), 0.0, 1.0)


def in_bulk(n: int, N: int) -> bool:
    return 1 <= n <= N and min(n, N + 1 - n) >= N**BULK_EXPONENT


def default_indices(m: EquilibriumMeasure, N: int) -> List[int]:
    """中点、其右邻，以及经典位置在中心右侧四分之一支撑宽处的下标"""
    far = int(round(N * float(m.cdf(m.support.center + 0.5 * m.support.half_width))))
    candidates = [N // 2, N // 2 + 1, far]
    return list(dict.fromkeys(n for n in candidates if in_bulk(n, N)))


def gustavsson(
    samples: SampleSet,
    m: EquilibriumMeasure,
    indices: Sequence[int],
    gates: Optional["GustavssonGates"] = None,
    min_samples: int = MIN_SAMPLES,
) -> ExperimentReport:
    """
    判定行：
        var    Var(Y_N(n)) 落在 var_window
        corr   相邻下标的相关系数 >= adjacent_min；
               经典位置宏观分离的两点 |corr| <= separated_max
    协方差与其余相关系数只报告，附有限 N 预测

    Args:
        samples: 样本集合
        m: 平衡测度
        indices: 体内下标（1..N，k̂ >= N^0.1）
        gates: 判定窗口，缺省为 GustavssonGates()
        min_samples: 最少样本数

    Returns:
        ExperimentReport
    """
    gates = gates or GustavssonGates()
    N, beta = samples.config.N, samples.config.beta
    indices = [int(n) for n in indices]
    if not indices:
        raise ValueError("indices 不能为空")
    for n in indices:
        if not in_bulk(n, N):
            raise ValueError(f"下标 {n} 不在体内（需要 k̂ >= N^{BULK_EXPONENT}）")
    if len(samples) < min_samples:
        raise UnderpoweredError(f"样本数 {len(samples)} 少于 {min_samples}")

    lam = samples.matrix()
    Y = np.column_stack([np.asarray(displacement(lam, m, n, beta)) for n in indices])
    gammas = [m.quantile(n, N) for n in indices]
    b = finite_n_b(m, indices, N)
    report = ExperimentReport(name="gustavsson", claim=GustavssonExperiment.claim)
    low, high = gates.var_window

    k = len(indices)
    std = Y.std(axis=0, ddof=1)
    for i in range(k):
        for j in range(i, k):
            inputs = {"n_i": indices[i], "n_j": indices[j]}
            estimate = covariance_estimate(samples, Y[:, i], Y[:, j])
            if i == j:
                report.add_window_row("var", estimate.mean, low, high, inputs, predicted=b[i, i], stderr=estimate.stderr)
                continue
            report.add_info("cov", estimate.mean, inputs, predicted=b[i, j], stderr=estimate.stderr)

            corr = float(np.corrcoef(Y[:, i], Y[:, j])[0, 1]) if std[i] > 0 and std[j] > 0 else float("nan")
            predicted: Optional[float] = b[i, j] / np.sqrt(b[i, i] * b[j, j]) if b[i, i] * b[j, j] > 0 else None
            inputs = {**inputs, "gamma_i": gammas[i], "gamma_j": gammas[j]}
            if abs(indices[i] - indices[j]) == 1:
                report.add_window_row("corr", corr, gates.adjacent_min, None, inputs, predicted=predicted)
            elif abs(gammas[i] - gammas[j]) >= gates.macroscopic_separation:
                report.add_window_row("corr", corr, -gates.separated_max, gates.separated_max, inputs, predicted=predicted)
            else:
                report.add_info("corr", corr, inputs, predicted=predicted)

    report.notes.update(
        {
            "finite_n_b": b.tolist(),
            "limit_reference": {"b": limit_b(indices, N).tolist()},
            "gates": gates.model_dump(),
        }
    )
    report.notes.update(mcmc_notes(samples, Y[:, 0]))
    return report


class GustavssonGates(BaseModel):
    """gustavsson 的判定窗口"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    var_window: Tuple[float, float] = Field(default=(0.7, 1.3), description="Var(Y_N(n)) 的区间")
    adjacent_min: float = Field(default=0.9, description="相邻下标相关系数的下界")
    separated_max: float = Field(default=0.15, gt=0, description="宏观分离两点 |corr| 的上界")
    macroscopic_separation: float = Field(default=0.5, gt=0, description="视为宏观分离的经典位置间距")

    @field_validator("var_window")
    @classmethod
    def _ordered(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError("var_window 需要 low < high")
        return value


class GustavssonParams(GustavssonGates):
    """gustavsson 参数"""

    indices: Optional[List[int]] = Field(default=None, description="缺省见 default_indices")
    min_samples: int = Field(default=MIN_SAMPLES, ge=1)

    def gates(self) -> GustavssonGates:
        return GustavssonGates(**self.model_dump(include=set(GustavssonGates.model_fields)))


class GustavssonExperiment(BaseExperiment):
    """特征值位移"""

    experiment_id: str = "gustavsson"
    experiment_name: str = "特征值位移 CLT"
    claim: str = "(Y_N(n_1), ..., Y_N(n_m)) converges to N(0, b)"

    @property
    def params_model(self) -> Type[BaseModel]:
        return GustavssonParams

    def run(self, context: ExperimentContext, params: GustavssonParams) -> ExperimentReport:
        N = context.run.single_N()
        indices = params.indices or default_indices(context.measure, N)
        return gustavsson(context.sample_set(N), context.measure, indices, params.gates(), params.min_samples)


gustavsson_experiment = GustavssonExperiment()
