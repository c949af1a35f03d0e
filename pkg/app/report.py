"""
汇总报告
读取输出目录中所有实验的 JSON 结果，生成 Markdown 摘要
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from utils.exceptions import ReportError
from utils.logger import get_logger

logger = get_logger(__name__)

SUMMARY_NAME = "summary.md"


def load_results(outdir: Union[str, Path]) -> List[Dict[str, Any]]:
    """
    读取 outdir 下的实验结果（带 verdict 字段的 *.json）

    Raises:
        ReportError: 目录不存在或没有任何实验结果
    """
    outdir = Path(outdir)
    if not outdir.is_dir():
        raise ReportError(f"输出目录不存在: {outdir}")

    results = []
    for path in sorted(outdir.glob("*.json")):
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            logger.warning(f"跳过无法解析的文件 {path.name}: {e}")
            continue
        if isinstance(document, dict) and "verdict" in document and "rows" in document:
            results.append(document)
    if not results:
        raise ReportError(f"{outdir} 中没有实验结果")
    return results


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        return ", ".join(f"{k}={_cell(v)}" for k, v in value.items()).replace("|", "\\|")
    return str(value).replace("|", "\\|")


def render_summary(results: List[Dict[str, Any]]) -> str:
    """每个实验一张表：判定行的通过情况，附带实验声明的结论"""
    lines = ["# loggas 实验汇总", ""]
    lines.append("| experiment | verdict | gated |")
    lines.append("|---|---|---|")
    for doc in results:
        lines.append(f"| {doc['name']} | {doc['verdict']} | {doc.get('gated', 0)} |")
    lines.append("")

    for doc in results:
        lines.append(f"## {doc['name']}: {doc['verdict']}")
        lines.append("")
        if doc.get("claim"):
            lines.append(f"Claim: {doc['claim']}")
            lines.append("")
        lines.append("| quantity | inputs | predicted | estimated | stderr | gate | result |")
        lines.append("|---|---|---|---|---|---|---|")
        for row in doc["rows"]:
            if not row.get("gate"):
                continue
            result = "PASS" if row.get("passed") else "FAIL"
            lines.append(
                "| "
                + " | ".join(
                    _cell(v)
                    for v in (
                        row["quantity"],
                        row.get("inputs") or {},
                        row.get("predicted"),
                        row.get("estimated"),
                        row.get("stderr"),
                        row["gate"],
                        result,
                    )
                )
                + " |"
            )
        lines.append("")
    return "\n".join(lines)


def build_report(outdir: Union[str, Path]) -> Tuple[str, bool]:
    """
    汇总 outdir 并写出 summary.md

    Returns:
        (Markdown 文本, 是否全部通过)
    """
    outdir = Path(outdir)
    results = load_results(outdir)
    text = render_summary(results)
    (outdir / SUMMARY_NAME).write_text(text, encoding="utf-8")
    all_passed = all(doc.get("passed") for doc in results)
    logger.info(f"汇总 {len(results)} 个实验 -> {outdir / SUMMARY_NAME}: {'PASS' if all_passed else 'FAIL'}")
    return text, all_passed
