"""
实验报告数据模型
"""
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class ReportRow(BaseModel):
    """报告中的一行：输入、预测值、估计值、标准误与判定"""

    quantity: str = Field(description="统计量名称")
    inputs: Dict[str, Any] = Field(default_factory=dict)
    predicted: Optional[float] = None
    estimated: Optional[float] = None
    stderr: Optional[float] = None
    z_score: Optional[float] = None
    gate: str = Field(default="", description="判定规则，空表示仅报告")
    passed: Optional[bool] = None


class ExperimentReport(BaseModel):
    """一个实验的完整结果"""

    name: str
    claim: str = Field(default="", description="被检验的结论")
    config: Dict[str, Any] = Field(default_factory=dict)
    rows: List[ReportRow] = Field(default_factory=list)
    notes: Dict[str, Any] = Field(default_factory=dict)

    @property
    def gated_rows(self) -> List[ReportRow]:
        return [r for r in self.rows if r.gate]

    @property
    def passed(self) -> bool:
        """全部判定行通过"""
        return all(bool(r.passed) for r in self.gated_rows)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    # ============================================
    # 添加行
    # ============================================

    def add_info(self, quantity: str, estimated: Optional[float], inputs: Optional[dict] = None,
                 predicted: Optional[float] = None, stderr: Optional[float] = None) -> ReportRow:
        """只报告、不判定"""
        z = None
        if predicted is not None and stderr and _finite(stderr):
            z = (estimated - predicted) / stderr
        row = ReportRow(
            quantity=quantity,
            inputs=inputs or {},
            predicted=_finite(predicted),
            estimated=_finite(estimated),
            stderr=_finite(stderr),
            z_score=_finite(z),
        )
        self.rows.append(row)
        return row

    def add_z_row(self, quantity: str, estimated: float, stderr: float, predicted: float = 0.0,
                  inputs: Optional[dict] = None, z_max: float = 4.0) -> ReportRow:
        """精确恒等式：|z| <= z_max"""
        row = self.add_info(quantity, estimated, inputs, predicted, stderr)
        row.gate = f"|z|<={z_max:g}"
        row.passed = row.z_score is not None and abs(row.z_score) <= z_max
        return row

    def add_abs_row(self, quantity: str, estimated: float, predicted: float, tol: float,
                    inputs: Optional[dict] = None, stderr: Optional[float] = None) -> ReportRow:
        """|估计 − 预测| <= tol"""
        row = self.add_info(quantity, estimated, inputs, predicted, stderr)
        row.gate = f"|est-pred|<={tol:g}"
        row.passed = row.estimated is not None and abs(estimated - predicted) <= tol
        return row

    def add_window_row(self, quantity: str, estimated: float, low: Optional[float], high: Optional[float],
                       inputs: Optional[dict] = None, predicted: Optional[float] = None,
                       stderr: Optional[float] = None) -> ReportRow:
        """low <= 估计 <= high（任一端可缺省）"""
        row = self.add_info(quantity, estimated, inputs, predicted, stderr)
        lo = "-inf" if low is None else f"{low:g}"
        hi = "inf" if high is None else f"{high:g}"
        row.gate = f"[{lo},{hi}]"
        ok = row.estimated is not None
        if ok and low is not None:
            ok = estimated >= low
        if ok and high is not None:
            ok = estimated <= high
        row.passed = ok
        return row

    def add_check(self, quantity: str, ok: bool, inputs: Optional[dict] = None,
                  estimated: Optional[float] = None, gate: str = "true") -> ReportRow:
        """布尔性质判定（单调性等）"""
        row = self.add_info(quantity, estimated, inputs)
        row.gate = gate
        row.passed = bool(ok)
        return row

    def summary(self) -> str:
        failed = [r.quantity for r in self.gated_rows if not r.passed]
        return f"{self.name}: {self.verdict} ({len(self.gated_rows) - len(failed)}/{len(self.gated_rows)})"
