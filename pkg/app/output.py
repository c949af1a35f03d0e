"""
实验产物输出
{name}.csv（报告行）、{name}.json（判定与备注）、{name}.svg（可选图）
"""
import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from models.report import ExperimentReport, ReportRow
from services.experiments.base import json_safe
from utils.logger import get_logger

logger = get_logger(__name__)

CSV_COLUMNS = ["quantity", "inputs", "predicted", "estimated", "stderr", "z_score", "gate", "passed"]

# 扫描类实验的作图方式：(行名前缀, 横轴输入名, x 取对数, y 取对数)
SCAN_PLOTS: Dict[str, Tuple[str, str, bool, bool]] = {
    "local-law": ("moment", "eta", True, True),
    "rigidity": ("constant", "N", True, False),
    "edge-tail": ("survival", "x", False, True),
    "wegner": ("mean_count", "delta", True, True),
}

# SVG 输出不带时间戳、固定哈希盐，保证重复运行字节一致
SVG_METADATA = {"Date": None}
SVG_HASHSALT = "loggas"


def format_float(value: Optional[float]) -> str:
    """17 位有效数字；None 与非有限值输出空单元格"""
    if value is None:
        return ""
    value = float(value)
    if not math.isfinite(value):
        return ""
    return "%.17g" % value


def _cell(row: ReportRow, column: str) -> str:
    value = getattr(row, column)
    if column == "inputs":
        return json.dumps(json_safe(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    if column == "passed":
        return "" if value is None else ("true" if value else "false")
    if column in ("quantity", "gate"):
        return value or ""
    return format_float(value)


def report_csv(report: ExperimentReport) -> str:
    """报告行转成 CSV 文本（表头 + RFC 4180 引号规则，行尾 CRLF）"""
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow([_cell(row, column) for column in CSV_COLUMNS])
    return buffer.getvalue()


def _sanitize(value: Any) -> Any:
    """JSON 不接受 NaN/Inf，统一写成 null"""
    value = json_safe(value)
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_sanitize(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def report_json(report: ExperimentReport) -> str:
    """判定、配置回显与备注"""
    document = {
        "name": report.name,
        "claim": report.claim,
        "verdict": report.verdict,
        "passed": report.passed,
        "gated": len(report.gated_rows),
        "failed": [r.quantity for r in report.gated_rows if not r.passed],
        "config": report.config,
        "notes": report.notes,
        "rows": [r.model_dump() for r in report.rows],
    }
    return json.dumps(_sanitize(document), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_text(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path


def write_json(path: Union[str, Path], document: Dict[str, Any]) -> Path:
    """写任意 JSON 文档（eq.json、oracle 结果等）"""
    return write_text(path, json.dumps(_sanitize(document), indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def write_csv(path: Union[str, Path], header: List[str], rows: List[List[Optional[float]]]) -> Path:
    """数值表格（如密度网格）"""
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return write_text(path, buffer.getvalue())


# ============================================
# 作图
# ============================================

def _scan_series(report: ExperimentReport, prefix: str, x_key: str) -> Tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for row in report.rows:
        if row.quantity.startswith(prefix) and x_key in row.inputs and row.estimated is not None:
            xs.append(float(row.inputs[x_key]))
            ys.append(row.estimated)
    return np.asarray(xs), np.asarray(ys)


def write_plot(report: ExperimentReport, path: Union[str, Path]) -> Optional[Path]:
    """
    扫描类实验画折线（按需对数坐标），其他实验画估计值对预测值的散点

    Returns:
        写出的路径；没有可画的数据时返回 None
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = SVG_HASHSALT

    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        if report.name in SCAN_PLOTS:
            prefix, x_key, log_x, log_y = SCAN_PLOTS[report.name]
            xs, ys = _scan_series(report, prefix, x_key)
            keep = np.ones(len(xs), dtype=bool)
            if log_x:
                keep &= xs > 0
            if log_y:
                keep &= ys > 0
            if not keep.any():
                return None
            ax.plot(xs[keep], ys[keep], "o-")
            ax.set_xscale("log" if log_x else "linear")
            ax.set_yscale("log" if log_y else "linear")
            ax.set_xlabel(x_key)
            ax.set_ylabel(prefix)
        else:
            pairs = [(r.predicted, r.estimated) for r in report.rows if r.predicted is not None and r.estimated is not None]
            if not pairs:
                return None
            predicted, estimated = map(np.asarray, zip(*pairs))
            ax.scatter(predicted, estimated, s=12)
            low = float(min(predicted.min(), estimated.min()))
            high = float(max(predicted.max(), estimated.max()))
            ax.plot([low, high], [low, high], "k--", linewidth=0.8)
            ax.set_xlabel("predicted")
            ax.set_ylabel("estimated")
        ax.set_title(f"{report.name}: {report.verdict}")
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
        return path
    finally:
        plt.close(fig)


def write_report(report: ExperimentReport, outdir: Union[str, Path], plot: bool = True) -> List[Path]:
    """
    写出一个实验的全部产物

    Args:
        report: 实验报告
        outdir: 输出目录
        plot: 是否写 SVG

    Returns:
        写出的文件列表
    """
    outdir = Path(outdir)
    paths = [
        write_text(outdir / f"{report.name}.csv", report_csv(report)),
        write_text(outdir / f"{report.name}.json", report_json(report)),
    ]
    if plot:
        try:
            svg = write_plot(report, outdir / f"{report.name}.svg")
        except (RuntimeError, ValueError) as e:
            logger.warning(f"{report.name} 作图失败: {e}")
            svg = None
        if svg is not None:
            paths.append(svg)
    logger.info(f"{report.name} 产物已写入 {outdir}")
    return paths
