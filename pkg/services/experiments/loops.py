"""
loop 方程检验
rank-1：E[s(z)² − (1/N)(1−2/β) s'(z) + (1/N) Σ V'(λ_k)/(λ_k − z)] = 0
rank-n：在 rank-1 残差上乘 Π s(z_i)，再加上 (2/(N²β)) Σ_j f(z, z_j) Π_{i≠j} s(z_i)
两者都是精确恒等式，预测值为 0
"""
from typing import Callable, List, Optional, Sequence, Tuple, Type, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.ensemble import SampleSet
from models.report import ExperimentReport
from services.equilibrium import EquilibriumMeasure
from services.experiments.base import (
    BaseExperiment,
    ExperimentContext,
    complex_points,
    mc_estimate,
    mcmc_notes,
)
from services.observables import loop_residual_rank1, loop_residual_rankn, stieltjes_emp
from services.oracle import OracleSpec, exact_expectation

Source = Union[SampleSet, OracleSpec]

MAX_EXTRA_POINTS = 4


def _check_off_axis(points: Sequence[complex]) -> None:
    for z in points:
        if complex(z).imag == 0:
            raise ValueError(f"求值点必须离开实轴: {z}")


def _add_rows(
    report: ExperimentReport,
    source: Source,
    quantity: str,
    residual: Callable[[np.ndarray], np.ndarray],
    inputs: dict,
    z_max: float,
    oracle_tol: float,
) -> None:
    """对一个复残差添加实部、虚部两行"""
    if isinstance(source, OracleSpec):
        result = exact_expectation(source, residual)
        value = complex(result.value)
        report.add_abs_row(f"{quantity}.re", value.real, 0.0, oracle_tol, inputs, stderr=result.error)
        report.add_abs_row(f"{quantity}.im", value.imag, 0.0, oracle_tol, inputs, stderr=result.error)
        return

    values = np.asarray(residual(source.matrix()), dtype=complex)
    for part, component in (("re", values.real), ("im", values.imag)):
        estimate = mc_estimate(source, component)
        report.add_z_row(f"{quantity}.{part}", estimate.mean, estimate.stderr, 0.0, inputs, z_max)
    report.notes.update(mcmc_notes(source, values.real))


def verify_loop_rank1(
    source: Source,
    m: Optional[EquilibriumMeasure],
    z_points: Sequence[complex],
    report: Optional[ExperimentReport] = None,
    z_max: float = 4.0,
    oracle_tol: float = 1e-7,
) -> ExperimentReport:
    """
    rank-1 loop 方程

    Args:
        source: 样本集合（蒙特卡洛）或 OracleSpec（精确积分）
        m: 平衡测度（蒙特卡洛时额外报告 E s_N − m_V）
        z_points: 离开实轴的求值点
        report: 追加到已有报告，缺省新建
        z_max: |z_score| 门限
        oracle_tol: 精确积分时的绝对门限

    Returns:
        ExperimentReport
    """
    _check_off_axis(z_points)
    report = report or ExperimentReport(name="verify-loops", claim=LoopsExperiment.claim)
    beta = source.beta if isinstance(source, OracleSpec) else source.config.beta
    potential = source.potential if isinstance(source, OracleSpec) else source.config.potential

    for z in z_points:
        z = complex(z)
        inputs = {"z": [z.real, z.imag]}
        _add_rows(
            report,
            source,
            "loop1",
            lambda lam, z=z: loop_residual_rank1(lam, potential, beta, z),
            inputs,
            z_max,
            oracle_tol,
        )
        if m is not None and isinstance(source, SampleSet):
            s = np.asarray(stieltjes_emp(source.matrix(), z))
            mv = complex(m.stieltjes(z))
            report.add_info("s_minus_mV.abs", abs(complex(s.mean()) - mv), inputs)
    return report


def verify_loop_rankn(
    source: Source,
    m: Optional[EquilibriumMeasure],
    z: complex,
    zs: Sequence[complex],
    report: Optional[ExperimentReport] = None,
    z_max: float = 4.0,
    oracle_tol: float = 1e-7,
) -> ExperimentReport:
    """
    rank-n loop 方程（n − 1 = len(zs) <= 4）

    Args:
        source: 样本集合或 OracleSpec
        m: 平衡测度（未使用时可为 None）
        z: 主求值点
        zs: 其余求值点
        report: 追加到已有报告，缺省新建
        z_max: |z_score| 门限
        oracle_tol: 精确积分时的绝对门限

    Returns:
        ExperimentReport
    """
    zs = [complex(w) for w in zs]
    if not 1 <= len(zs) <= MAX_EXTRA_POINTS:
        raise ValueError(f"zs 的长度必须在 1..{MAX_EXTRA_POINTS} 之间: {len(zs)}")
    _check_off_axis([z, *zs])
    report = report or ExperimentReport(name="verify-loops", claim=LoopsExperiment.claim)
    beta = source.beta if isinstance(source, OracleSpec) else source.config.beta
    potential = source.potential if isinstance(source, OracleSpec) else source.config.potential

    z = complex(z)
    inputs = {"z": [z.real, z.imag], "zs": [[w.real, w.imag] for w in zs]}
    _add_rows(
        report,
        source,
        f"loop{len(zs) + 1}",
        lambda lam: loop_residual_rankn(lam, potential, beta, z, zs),
        inputs,
        z_max,
        oracle_tol,
    )
    return report


class LoopsParams(BaseModel):
    """verify-loops 参数"""

    model_config = ConfigDict(extra="forbid")

    z_points: List[Tuple[float, float]] = Field(default=[(0.3, 0.5), (0.0, 1.0), (-1.0, 0.5)])
    rankn_z: Tuple[float, float] = (0.0, 1.0)
    rankn_zs: List[Tuple[float, float]] = Field(default=[(0.0, 2.0)])
    use_oracle: Optional[bool] = Field(default=None, description="缺省时 N <= 3 用精确积分")
    z_max: float = Field(default=4.0, gt=0)
    oracle_tol: float = Field(default=1e-7, gt=0)


class LoopsExperiment(BaseExperiment):
    """loop 方程"""

    experiment_id: str = "verify-loops"
    experiment_name: str = "loop 方程"
    claim: str = (
        "E[s(z)^2] - (1/N)(1-2/beta) E[s'(z)] + E[(1/N) sum V'(l_k)/(l_k - z)] = 0 "
        "and its rank-n extension hold exactly"
    )

    @property
    def params_model(self) -> Type[BaseModel]:
        return LoopsParams

    def run(self, context: ExperimentContext, params: LoopsParams) -> ExperimentReport:
        N = context.run.single_N()
        use_oracle = params.use_oracle if params.use_oracle is not None else N <= 3
        if use_oracle:
            source: Source = OracleSpec(beta=context.run.beta, N=N, potential=context.run.potential)
        else:
            source = context.sample_set(N)

        report = ExperimentReport(name=self.experiment_id, claim=self.claim)
        report.notes["source"] = "oracle" if use_oracle else context.run.method.value
        m = context.measure
        verify_loop_rank1(source, m, complex_points(params.z_points), report, params.z_max, params.oracle_tol)
        verify_loop_rankn(
            source,
            m,
            complex_points([params.rankn_z])[0],
            complex_points(params.rankn_zs),
            report,
            params.z_max,
            params.oracle_tol,
        )
        return report


loops_experiment = LoopsExperiment()
