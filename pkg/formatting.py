"""Helper utilities for formatting numeric outputs."""
from __future__ import annotations

import math
from typing import Any, Dict, List

import pandas as pd

from models.experiment import ProbeResult, Report

STATUS_LABELS: Dict[str, str] = {
    "pass": "合格",
    "fail": "不合格",
    "error": "エラー",
}

SUMMARY_COLUMNS = ["probe", "op", "status", "verdict", "worst", "seconds"]


def format_float(value: object, digits: int = 3) -> str:
    try:
        number = float(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        return "—"
    if math.isnan(number) or math.isinf(number):
        return "—"
    if number == 0.0:
        return "0"
    return f"{number:.{digits}e}"


def format_status(status: str) -> str:
    return STATUS_LABELS.get(status, status)


def worst_statistic(result: ProbeResult) -> str:
    """Largest ``max`` over the probe's residual series, formatted."""

    maxima = [stats["max"] for stats in result.statistics.values() if "max" in stats]
    if not maxima:
        return "—"
    return format_float(max(maxima))


def summary_frame(report: Report) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for result in report.probes:
        rows.append(
            {
                "probe": result.name,
                "op": result.op,
                "status": format_status(result.status),
                "verdict": result.verdict or (result.error or "—"),
                "worst": worst_statistic(result),
                "seconds": f"{result.wall_time_s:.2f}",
            }
        )
    frame = pd.DataFrame(rows)
    if frame.empty:
        frame = pd.DataFrame(columns=SUMMARY_COLUMNS)
    return frame


def render_summary(report: Report) -> str:
    passed = sum(1 for result in report.probes if result.status == "pass")
    header = [
        f"実験: {report.name}",
        f"seed: {report.seed}  config: {report.config_hash[:12]}  version: {report.library_version}",
        f"結果: {passed}/{len(report.probes)} 合格",
        "",
    ]
    if not report.probes:
        return "\n".join(header + ["(プローブなし)"]) + "\n"
    table = summary_frame(report).to_string(index=False)
    return "\n".join(header + [table]) + "\n"


__all__ = [
    "STATUS_LABELS",
    "SUMMARY_COLUMNS",
    "format_float",
    "format_status",
    "worst_statistic",
    "summary_frame",
    "render_summary",
]
