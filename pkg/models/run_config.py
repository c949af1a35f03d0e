"""
运行配置
一个 JSON 文档描述势、系综、采样与实验参数；未知字段一律拒绝
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from models.ensemble import EnsembleConfig, MCMCSettings, SamplerMethod
from models.potential import Potential, PotentialKind
from utils.exceptions import ConfigError

SEED_LIMIT = 1 << 64


def format_validation_error(error: ValidationError, prefix: str = "") -> ConfigError:
    """把 pydantic 校验错误转成 "config key 'a.b': 消息" 形式"""
    first = error.errors()[0]
    path = ".".join(str(p) for p in (*([prefix] if prefix else []), *first["loc"]))
    return ConfigError(f"config key '{path or '<root>'}': {first['msg']}")


class RunConfig(BaseModel):
    """一次运行的完整配置"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    potential: Potential = Field(default_factory=lambda: Potential(kind=PotentialKind.QUADRATIC))
    beta: float = Field(default=2.0, gt=0)
    N: Union[int, List[int]] = Field(default=64, description="粒子数，rigidity 使用列表")
    method: SamplerMethod = SamplerMethod.TRIDIAGONAL
    mcmc: MCMCSettings = Field(default_factory=MCMCSettings)
    experiment: Optional[str] = Field(default=None, description="实验名称")
    params: Dict[str, Any] = Field(default_factory=dict, description="实验参数，由实验自身的模型校验")
    seed: int = Field(default=0, ge=0, lt=SEED_LIMIT)
    chains: int = Field(default=1, ge=1)
    samples: int = Field(default=200, ge=1, description="每条链的样本数")
    cache: Optional[str] = None
    output: Optional[str] = None
    threads: int = Field(default=0, ge=0, description="0 表示自动")

    @field_validator("N")
    @classmethod
    def _check_n(cls, value: Union[int, List[int]]) -> Union[int, List[int]]:
        values = value if isinstance(value, list) else [value]
        if not values:
            raise ValueError("N 列表不能为空")
        if any(n < 1 for n in values):
            raise ValueError("N 必须为正整数")
        if isinstance(value, list) and any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("N 列表必须严格递增")
        return value

    @property
    def Ns(self) -> List[int]:
        return list(self.N) if isinstance(self.N, list) else [self.N]

    def single_N(self) -> int:
        """只允许一个 N 的场合"""
        if len(self.Ns) != 1:
            raise ConfigError(f"config key 'N': 该命令只接受一个 N，当前为 {self.Ns}")
        return self.Ns[0]

    def ensemble(self, N: Optional[int] = None) -> EnsembleConfig:
        """构造 EnsembleConfig（校验失败转成 ConfigError）"""
        try:
            return EnsembleConfig(
                beta=self.beta,
                N=N if N is not None else self.single_N(),
                potential=self.potential,
                method=self.method,
                mcmc=self.mcmc,
            )
        except ValidationError as e:
            raise format_validation_error(e) from e

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise format_validation_error(e) from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """
        读取 JSON 配置文件

        Raises:
            ConfigError: 文件不存在、不是合法 JSON 或字段校验失败
        """
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"配置文件不存在: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"配置文件不是合法 JSON: {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config key '<root>': 顶层必须是对象")
        return cls.from_dict(data)
