"""
外势数据模型
V 限定为偶数次、首项系数为正的多项式
"""
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict, Field, model_validator


class PotentialKind(str, Enum):
    """势函数类型"""

    QUADRATIC = "quadratic"
    QUARTIC = "quartic"
    POLYNOMIAL = "polynomial"


class Potential(BaseModel):
    """
    外势 V

    quadratic: V(x) = x²/2
    quartic:   V(x) = x⁴/4 + t·x²/2
    polynomial: V(x) = Σ coefficients[k]·x^k（升幂）
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PotentialKind = Field(description="势函数类型")
    t: Optional[float] = Field(default=None, description="quartic 的耦合常数")
    coefficients: Optional[Tuple[float, ...]] = Field(default=None, description="polynomial 的升幂系数")

    @model_validator(mode="after")
    def _check(self) -> "Potential":
        from utils.exceptions import PotentialError

        if self.kind == PotentialKind.QUARTIC and self.t is None:
            raise PotentialError("quartic 势需要参数 t")
        if self.kind != PotentialKind.QUARTIC and self.t is not None:
            raise PotentialError(f"{self.kind.value} 势不接受参数 t")
        if self.kind == PotentialKind.POLYNOMIAL:
            coeffs = np.trim_zeros(np.asarray(self.coefficients or [], dtype=float), "b")
            degree = len(coeffs) - 1
            if degree < 2 or degree % 2:
                raise PotentialError(f"多项式势的次数必须为不小于 2 的偶数，当前为 {degree}")
            if coeffs[-1] <= 0:
                raise PotentialError("多项式势的首项系数必须为正")
        elif self.coefficients is not None:
            raise PotentialError(f"{self.kind.value} 势不接受 coefficients")
        return self

    @cached_property
    def coeffs(self) -> np.ndarray:
        """升幂系数"""
        if self.kind == PotentialKind.QUADRATIC:
            c = np.array([0.0, 0.0, 0.5])
        elif self.kind == PotentialKind.QUARTIC:
            c = np.array([0.0, 0.0, 0.5 * self.t, 0.0, 0.25])
        else:
            c = np.trim_zeros(np.asarray(self.coefficients, dtype=float), "b")
        c.setflags(write=False)
        return c

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @cached_property
    def derivative_coeffs(self) -> tuple:
        """(V, V', V'') 的升幂系数"""
        c0 = self.coeffs
        c1 = P.polyder(c0)
        c2 = P.polyder(c1)
        return c0, c1, c2

    def label(self) -> str:
        """简短描述（日志与报告用）"""
        if self.kind == PotentialKind.QUARTIC:
            return f"quartic(t={self.t:g})"
        if self.kind == PotentialKind.POLYNOMIAL:
            return f"polynomial(deg={self.degree})"
        return "quadratic"

    def __repr__(self) -> str:
        return f"<Potential {self.label()}>"
