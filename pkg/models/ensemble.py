"""
系综与样本数据模型
"""
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.potential import Potential, PotentialKind


class SamplerMethod(str, Enum):
    """采样方法"""

    TRIDIAGONAL = "tridiagonal"
    MALA = "mala"


class MCMCSettings(BaseModel):
    """MALA 参数"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    burn_in_sweeps: int = Field(default=2000, ge=0, description="预烧扫描数")
    thinning_sweeps: int = Field(default=50, ge=1, description="相邻样本间隔的扫描数")
    step_size: Optional[float] = Field(default=None, gt=0, description="初始步长，缺省按 N、β 推断")
    adapt: bool = Field(default=True, description="预烧期间是否自适应步长")


class EnsembleConfig(BaseModel):
    """
    β-系综配置

    密度 ∝ Π_{k<l} |λ_k − λ_l|^β · exp(−(βN/2) Σ V(λ_k))
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: float = Field(gt=0, description="逆温度 β")
    N: int = Field(ge=1, description="粒子数")
    potential: Potential
    method: SamplerMethod = SamplerMethod.TRIDIAGONAL
    mcmc: MCMCSettings = Field(default_factory=MCMCSettings)

    @model_validator(mode="after")
    def _check_method(self) -> "EnsembleConfig":
        if self.method == SamplerMethod.TRIDIAGONAL and self.potential.kind != PotentialKind.QUADRATIC:
            raise ValueError("三对角采样只适用于二次势")
        return self

    def canonical_json(self) -> str:
        """规范化 JSON（用于缓存键）"""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Sample:
    """一个有序构型 λ_1 < … < λ_N"""

    lambdas: np.ndarray
    seed: int
    chain_id: int
    sweep_index: int

    def __post_init__(self):
        self.lambdas.setflags(write=False)

    @property
    def N(self) -> int:
        return len(self.lambdas)

    def is_valid(self) -> bool:
        """严格递增且全部有限"""
        lam = self.lambdas
        return bool(np.all(np.isfinite(lam)) and np.all(np.diff(lam) > 0))


@dataclass
class SampleSet:
    """同一 (β, N, V) 下的样本集合，按 (chain_id, sweep_index) 排序"""

    config: EnsembleConfig
    samples: List[Sample]
    rng_stream_ids: List[int] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.samples:
            raise ValueError("样本集合不能为空")
        self.samples.sort(key=lambda s: (s.chain_id, s.sweep_index))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def iid(self) -> bool:
        """三对角样本互相独立；MCMC 样本需要批均值"""
        return self.config.method == SamplerMethod.TRIDIAGONAL

    def matrix(self) -> np.ndarray:
        """(样本数, N) 的特征值矩阵"""
        return np.vstack([s.lambdas for s in self.samples])

    def chain_ids(self) -> np.ndarray:
        return np.array([s.chain_id for s in self.samples])

    def __repr__(self) -> str:
        return (
            f"<SampleSet {self.config.method.value} beta={self.config.beta:g} "
            f"N={self.config.N} {self.config.potential.label()} n={len(self)}>"
        )
