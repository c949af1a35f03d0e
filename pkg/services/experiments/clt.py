"""
对数相关场的中心极限定理
在 z_ℓ = E_ℓ + iη(E_ℓ) 处计算 L_N，与有限 N 的协方差预测比较：
    Cov(Re L(z_ℓ), Re L(z_j)) ≈ −(1/β) log|z̄_ℓ − z_j|
    Cov(Im L(z_ℓ), Im L(z_j)) ≈ −(1/β) log((|z̄_ℓ − z_j| / (κ_ℓ ∨ η_ℓ)) ∧ 1)
    Cov(Re, Im) ≈ 0
均值平移 δ_ℓ = ¼(2/β − 1) log(κ(E_ℓ) ∨ N^{-2/3})
"""
from typing import Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import (
    BaseExperiment,
    ExperimentContext,
    covariance_estimate,
    mc_estimate,
    mcmc_notes,
)
from services.observables import log_char_batch
from utils.exceptions import UnderpoweredError
from utils.stats import moment_z_scores

MIN_SAMPLES = 500
# Im-Im 预测两种顺序之间允许的相对差异（体内）
SYMMETRY_TOLERANCE = 0.1


def mean_shift(m: EquilibriumMeasure, E: float, N: int, beta: float) -> float:
    """δ = ¼(2/β − 1) log(κ(E) ∨ N^{-2/3})"""
    kappa = m.scales(E, N).kappa
    return 0.25 * (2.0 / beta - 1.0) * float(np.log(max(kappa, N ** (-2.0 / 3.0))))


def predicted_covariances(
    m: EquilibriumMeasure,
    energies: Sequence[float],
    N: int,
    beta: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    有限 N 的协方差预测

    Returns:
        (Re-Re, 对称化后的 Im-Im, Im-Im 两种顺序的相对差)
    """
    scales = [m.scales(E, N) for E in energies]
    zs = np.array([complex(E, sc.eta) for E, sc in zip(energies, scales)])
    cutoff = np.array([max(sc.kappa, sc.eta) for sc in scales])
    distance = np.abs(np.conj(zs)[:, None] - zs[None, :])

    re_re = -np.log(distance) / beta
    raw = -np.log(np.minimum(distance / cutoff[:, None], 1.0)) / beta
    im_im = 0.5 * (raw + raw.T)
    scale = np.maximum(np.abs(im_im), 1e-300)
    discrepancy = np.where(np.abs(im_im) > 1e-12, np.abs(raw - raw.T) / scale, 0.0)
    return re_re, im_im, discrepancy


def finite_n_log_ratios(m: EquilibriumMeasure, energies: Sequence[float], N: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    a_ij = log(|E_i − E_j| ∨ ℓ(E_i)) / (−log N)
    b_ij = log(((|E_i − E_j| ∨ ℓ(E_i)) / κ(E_i)) ∧ 1) / (−log N)
    """
    k = len(energies)
    a = np.zeros((k, k))
    b = np.zeros((k, k))
    for i, Ei in enumerate(energies):
        sc = m.scales(Ei, N)
        for j, Ej in enumerate(energies):
            gap = max(abs(Ei - Ej), sc.ell)
            a[i, j] = np.log(gap) / -np.log(N)
            ratio = gap / sc.kappa if sc.kappa > 0 else np.inf
            b[i, j] = np.log(min(ratio, 1.0)) / -np.log(N)
    return a, b


def limit_reference(m: EquilibriumMeasure, energies: Sequence[float]) -> Dict[str, List[List[float]]]:
    """固定能量下 N → ∞ 的 a、b 矩阵：不同能量为 0；体内重合为 1，谱边重合时 a = 2/3、b = 0"""
    k = len(energies)
    a = np.zeros((k, k))
    b = np.zeros((k, k))
    for i, Ei in enumerate(energies):
        interior = m.A < Ei < m.B
        for j, Ej in enumerate(energies):
            if Ei == Ej:
                a[i, j] = 1.0 if interior else 2.0 / 3.0
                b[i, j] = 1.0 if interior else 0.0
    return {"a": a.tolist(), "b": b.tolist()}


def clt_logfield(
    samples: SampleSet,
    m: EquilibriumMeasure,
    energies: Sequence[float],
    gates: Optional["CLTGates"] = None,
    min_samples: int = MIN_SAMPLES,
) -> ExperimentReport:
    """
    判定行：
        var.im.normalized      Var(Im L)·β/log N 落在 var_window
        cov.re_im.normalized   |Cov(Re, Im)|·β/log N < re_im_max（所有能量对）
        cov.im_im.normalized   宏观分离的两点 |Cov(Im, Im)|·β/log N < separated_im_im_max
        mean.re                E Re L 与 δ 相差不超过 mean_z_max 个标准误
        mean.re.sign           β ≠ 2 时 E Re L 与 δ 同号
    其余协方差只报告，附有限 N 预测

    Args:
        samples: 样本集合（至少 min_samples 个）
        m: 平衡测度
        energies: [A,B] 内的能量
        gates: 判定窗口，缺省为 CLTGates()
        min_samples: 最少样本数

    Returns:
        ExperimentReport
    """
    gates = gates or CLTGates()
    energies = [float(E) for E in energies]
    if not energies:
        raise ValueError("energies 不能为空")
    if any(not m.A <= E <= m.B for E in energies):
        raise ValueError(f"能量必须在 [{m.A}, {m.B}] 内: {energies}")
    if len(samples) < min_samples:
        raise UnderpoweredError(f"样本数 {len(samples)} 少于 {min_samples}")

    N, beta = samples.config.N, samples.config.beta
    lam = samples.matrix()
    zs = [complex(E, m.scales(E, N).eta) for E in energies]
    field = np.column_stack([np.asarray(log_char_batch(lam, m, z)) for z in zs])
    normalization = beta / np.log(N)

    report = ExperimentReport(name="clt", claim=CLTExperiment.claim)
    re_re, im_im, discrepancy = predicted_covariances(m, energies, N, beta)
    low, high = gates.var_window

    for i, E in enumerate(energies):
        inputs = {"E": E, "eta": zs[i].imag}
        shift = mean_shift(m, E, N, beta)
        estimate = mc_estimate(samples, field[:, i].real)
        report.add_z_row("mean.re", estimate.mean, estimate.stderr, shift, inputs, gates.mean_z_max)
        if shift != 0.0:
            report.add_check(
                "mean.re.sign",
                np.sign(estimate.mean) == np.sign(shift),
                inputs,
                estimated=estimate.mean,
                gate=f"sign={'+' if shift > 0 else '-'}",
            )

        variance = covariance_estimate(samples, field[:, i].imag, field[:, i].imag)
        report.add_window_row(
            "var.im.normalized",
            variance.mean * normalization,
            low,
            high,
            inputs,
            predicted=im_im[i, i] * normalization,
            stderr=variance.stderr * normalization,
        )
        for part, values in (("re", field[:, i].real), ("im", field[:, i].imag)):
            skew, kurt = moment_z_scores(values)
            report.add_info(f"skew_z.{part}", skew, inputs)
            report.add_info(f"kurtosis_z.{part}", kurt, inputs)

    k = len(energies)
    for i in range(k):
        for j in range(k):
            # Re(z_i) 与 Im(z_j)：两种顺序都检查
            estimate = covariance_estimate(samples, field[:, i].real, field[:, j].imag)
            report.add_window_row(
                "cov.re_im.normalized",
                estimate.mean * normalization,
                -gates.re_im_max,
                gates.re_im_max,
                {"E_re": energies[i], "E_im": energies[j]},
                predicted=0.0,
                stderr=estimate.stderr * normalization,
            )

    for i in range(k):
        for j in range(i, k):
            inputs = {"E_i": energies[i], "E_j": energies[j]}
            estimate = covariance_estimate(samples, field[:, i].real, field[:, j].real)
            report.add_info(
                "cov.re_re.normalized",
                estimate.mean * normalization,
                inputs,
                predicted=re_re[i, j] * normalization,
                stderr=estimate.stderr * normalization,
            )
            if i == j:
                continue

            estimate = covariance_estimate(samples, field[:, i].imag, field[:, j].imag)
            values = dict(
                inputs=inputs,
                predicted=im_im[i, j] * normalization,
                stderr=estimate.stderr * normalization,
            )
            if abs(energies[i] - energies[j]) >= gates.macroscopic_separation:
                report.add_window_row(
                    "cov.im_im.normalized",
                    estimate.mean * normalization,
                    -gates.separated_im_im_max,
                    gates.separated_im_im_max,
                    **values,
                )
            else:
                report.add_info("cov.im_im.normalized", estimate.mean * normalization, **values)
            if m.A < energies[i] < m.B and m.A < energies[j] < m.B:
                report.add_window_row("im_im.symmetry_discrepancy", discrepancy[i, j], None, SYMMETRY_TOLERANCE, inputs)

    a, b = finite_n_log_ratios(m, energies, N)
    report.notes.update(
        {
            "finite_n_surrogate": "covariances evaluated at z = E + i*eta(E); a, b below are the log-ratios at this N",
            "finite_n_a": a.tolist(),
            "finite_n_b": b.tolist(),
            "limit_reference": limit_reference(m, energies),
            "im_im_discrepancy": discrepancy.tolist(),
            "gates": gates.model_dump(),
        }
    )
    report.notes.update(mcmc_notes(samples, field[:, 0].imag))
    return report


class CLTGates(BaseModel):
    """clt 的判定窗口"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    var_window: Tuple[float, float] = Field(default=(0.7, 1.3), description="Var(Im L)·β/log N 的区间")
    re_im_max: float = Field(default=0.1, gt=0, description="|Cov(Re, Im)|·β/log N 的上界")
    separated_im_im_max: float = Field(default=0.15, gt=0, description="宏观分离两点 |Cov(Im, Im)|·β/log N 的上界")
    macroscopic_separation: float = Field(default=0.5, gt=0, description="视为宏观分离的能量间距")
    mean_z_max: float = Field(default=4.0, gt=0, description="E Re L 与 δ 的 |z| 上界")

    @field_validator("var_window")
    @classmethod
    def _ordered(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError("var_window 需要 low < high")
        return value


class CLTParams(CLTGates):
    """clt 参数"""

    energies: List[float] = Field(default=[0.0, 1.0])
    min_samples: int = Field(default=MIN_SAMPLES, ge=1)

    def gates(self) -> CLTGates:
        return CLTGates(**self.model_dump(include=set(CLTGates.model_fields)))


class CLTExperiment(BaseExperiment):
    """对数场 CLT"""

    experiment_id: str = "clt"
    experiment_name: str = "对数相关场 CLT"
    claim: str = (
        "sqrt(beta/log N) (Re L_N(E_i) - delta_i, Im L_N(E_i)) converges to a centered Gaussian "
        "with block covariance diag(a, b)"
    )

    @property
    def params_model(self) -> Type[BaseModel]:
        return CLTParams

    def run(self, context: ExperimentContext, params: CLTParams) -> ExperimentReport:
        return clt_logfield(
            context.sample_set(),
            context.measure,
            params.energies,
            params.gates(),
            params.min_samples,
        )


clt_experiment = CLTExperiment()
