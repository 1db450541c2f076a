"""Loading experiment configs and writing report artefacts."""

from __future__ import annotations

import hashlib
import json
import logging

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Mapping

import pandas as pd

from formatting import render_summary
from models.errors import ConfigError, ReportIOError
from models.experiment import ExperimentSpec, Report
from validators import to_config_error, validate_experiment

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.txt"


def read_config(path: str | Path) -> Dict[str, Any]:
    """Parse a TOML file; syntax and encoding errors become :class:`ConfigError`."""

    source = Path(path)
    try:
        text = source.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise ConfigError([{"loc": ("path",), "msg": f"設定ファイルが見つかりません: {source}", "type": "missing_file"}]) from None
    except UnicodeDecodeError as exc:
        raise ConfigError([{"loc": ("path",), "msg": f"UTF-8 として読み込めません: {exc.reason}", "type": "encoding"}]) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([{"loc": ("toml",), "msg": f"TOML の構文エラー: {exc}", "type": "toml_syntax"}]) from None


def parse_experiment(data: Mapping[str, Any]) -> ExperimentSpec:
    spec, issues = validate_experiment(dict(data))
    if issues or spec is None:
        raise to_config_error(issues)
    return spec


def load_experiment(path: str | Path) -> ExperimentSpec:
    """Read and validate a config; every expression is parsed before returning."""

    spec = parse_experiment(read_config(path))
    logger.debug("loaded experiment %s from %s (%d probes)", spec.name, path, len(spec.probes))
    return spec


def config_hash(spec: ExperimentSpec) -> str:
    canonical = json.dumps(spec.model_dump(mode="json"), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def report_to_json(report: Report) -> str:
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def read_report(path: str | Path) -> Report:
    return Report.model_validate_json(Path(path).read_text(encoding="utf-8"))


def emit(
    report: Report,
    out_dir: str | Path,
    trajectories: Mapping[str, pd.DataFrame] | None = None,
) -> List[Path]:
    """Write ``report.json``, ``summary.txt`` and one CSV per exported trajectory."""

    target = Path(out_dir)
    written: List[Path] = []
    try:
        target.mkdir(parents=True, exist_ok=True)
        report_path = target / REPORT_FILE
        report_path.write_text(report_to_json(report), encoding="utf-8")
        written.append(report_path)
        summary_path = target / SUMMARY_FILE
        summary_path.write_text(render_summary(report), encoding="utf-8")
        written.append(summary_path)
        for name, frame in sorted((trajectories or {}).items()):
            csv_path = target / f"{name}.csv"
            frame.to_csv(csv_path, index=False)
            written.append(csv_path)
    except OSError as exc:
        raise ReportIOError(f"failed to write reports to {target}: {exc}") from exc
    logger.info("wrote %d files to %s", len(written), target)
    return written


__all__ = [
    "REPORT_FILE",
    "SUMMARY_FILE",
    "read_config",
    "parse_experiment",
    "load_experiment",
    "config_hash",
    "report_to_json",
    "read_report",
    "emit",
]
