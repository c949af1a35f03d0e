"""
实验基类
定义实验的标准接口与共享的运行上下文
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Type

import numpy as np
from pydantic import BaseModel, ValidationError

from database.sample_cache import SampleCache
from models.ensemble import SampleSet, SamplerMethod
from models.report import ExperimentReport
from models.run_config import RunConfig, format_validation_error
from services.equilibrium import EquilibriumMeasure, solve_equilibrium
from services.potential import check_one_cut
from services.sampler import run_chains
from utils.logger import get_logger
from utils.stats import Estimate, effective_sample_size, estimate_mean, split_by_chain

logger = get_logger(__name__)


@dataclass
class ExperimentContext:
    """
    一次运行的上下文：配置、线程预算、缓存，以及按需求解的平衡测度和样本
    """

    run: RunConfig
    threads: int = 1
    cache: Optional[SampleCache] = None
    _measure: Optional[EquilibriumMeasure] = field(default=None, repr=False)
    _samples: Dict[int, SampleSet] = field(default_factory=dict, repr=False)

    @property
    def measure(self) -> EquilibriumMeasure:
        if self._measure is None:
            self._measure = solve_equilibrium(self.run.potential)
            check_one_cut(self.run.potential, self._measure)
        return self._measure

    def sample_set(self, N: Optional[int] = None) -> SampleSet:
        """按 RunConfig 采样（同一 N 只采一次）"""
        N = N if N is not None else self.run.single_N()
        if N not in self._samples:
            config = self.run.ensemble(N)
            measure = self.measure if config.method == SamplerMethod.MALA else None
            self._samples[N] = run_chains(
                config,
                n_chains=self.run.chains,
                n_samples_per_chain=self.run.samples,
                seed=self.run.seed,
                threads=self.threads,
                measure=measure,
                cache=self.cache,
            )
        return self._samples[N]


class BaseExperiment(ABC):
    """
    实验基类

    所有实验都需要继承此类并实现抽象方法
    """

    # 实验元信息（子类必须覆盖）
    experiment_id: str = ""       # 实验标识（同时是 CLI 子命令名，如 "local-law"）
    experiment_name: str = ""     # 实验名称
    claim: str = ""               # 被检验的结论

    @property
    @abstractmethod
    def params_model(self) -> Type[BaseModel]:
        """
        返回实验参数的 Pydantic 模型

        Returns:
            参数模型类（extra="forbid"）
        """

    @abstractmethod
    def run(self, context: ExperimentContext, params: BaseModel) -> ExperimentReport:
        """
        执行实验

        Args:
            context: 运行上下文
            params: 已校验的实验参数

        Returns:
            ExperimentReport
        """

    def parse_params(self, raw: Optional[Dict[str, Any]]) -> BaseModel:
        """校验 RunConfig.params，错误信息带上 params 前缀"""
        try:
            return self.params_model.model_validate(raw or {})
        except ValidationError as e:
            raise format_validation_error(e, prefix="params") from e

    def execute(self, context: ExperimentContext) -> ExperimentReport:
        """解析参数并运行，报告中附带配置回显"""
        params = self.parse_params(context.run.params)
        logger.info(f"运行实验 {self.experiment_id}: {params.model_dump()}")
        report = self.run(context, params)
        report.config = {
            **json_safe(context.run.model_dump(mode="json")),
            "params": params.model_dump(mode="json"),
        }
        logger.info(report.summary())
        return report

    def __repr__(self) -> str:
        return f"<Experiment {self.experiment_id}: {self.experiment_name}>"


# ============================================
# 实验共用的统计工具
# ============================================

def json_safe(value: Any) -> Any:
    """numpy 标量、复数转成 JSON 可写的值"""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def mc_estimate(sample_set: SampleSet, values: Sequence[float]) -> Estimate:
    """按链分组估计均值与标准误（独立样本或批均值）"""
    values = np.asarray(values, dtype=float)
    return estimate_mean(split_by_chain(values, sample_set.chain_ids()), iid=sample_set.iid)


def covariance_estimate(sample_set: SampleSet, x: np.ndarray, y: np.ndarray) -> Estimate:
    """Cov(x, y) 及其标准误（中心化乘积的均值）"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return mc_estimate(sample_set, (x - x.mean()) * (y - y.mean()))


def mcmc_notes(sample_set: SampleSet, values: Optional[Sequence[float]] = None) -> Dict[str, Any]:
    """MCMC 样本的诊断信息（接受率、有效样本量）；独立样本返回空"""
    if sample_set.iid:
        return {}
    notes: Dict[str, Any] = {"mcmc": json_safe(sample_set.diagnostics)}
    if values is not None:
        chains = split_by_chain(np.asarray(values, dtype=float), sample_set.chain_ids())
        notes["effective_sample_size"] = float(effective_sample_size(chains))
    return notes


def complex_points(pairs: Sequence[Sequence[float]]) -> list:
    """[[re, im], ...] 转成复数列表"""
    return [complex(float(p[0]), float(p[1])) for p in pairs]
