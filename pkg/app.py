"""Command-line entry point for running geometry experiments and acceptance suites."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from core.io import emit, load_experiment, parse_experiment
from core.runner import RunResult, run
from core.suites import SUITES, verify
from formatting import render_summary
from models.errors import ConfigError, ReportIOError
from models.experiment import ExperimentSpec

logger = logging.getLogger("finsler")

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"カンマ区切りの数値を指定してください: {text!r}") from None


def _common_parser(nested: bool = False) -> argparse.ArgumentParser:
    # Subcommand copies leave unset flags alone so values given before the subcommand survive.
    default: Any = argparse.SUPPRESS if nested else None
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=default, help="実験設定 (TOML)")
    common.add_argument("--out", type=Path, default=default, help="レポートの出力先ディレクトリ")
    common.add_argument("--seed", type=int, default=default, help="設定の seed を上書き")
    common.add_argument("--jobs", type=int, default=default, help="並列に実行するプローブ数")
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS if nested else False, help="詳細ログを表示")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finsler", description="擬 Finsler 幾何の数値実験ランナー", parents=[_common_parser()])
    common = _common_parser(nested=True)
    parser.add_argument("--list-suites", action="store_true", help="同梱の検証スイートを一覧表示")
    sub = parser.add_subparsers(dest="command")

    run_cmd = sub.add_parser("run", parents=[common], help="設定ファイルの全プローブを実行")
    run_cmd.add_argument("path", nargs="?", type=Path, help="実験設定 (--config と同じ)")

    eval_cmd = sub.add_parser("eval", parents=[common], help="一点での幾何量を出力")
    eval_cmd.add_argument("--metric", required=True)
    eval_cmd.add_argument("--x", type=_floats, required=True)
    eval_cmd.add_argument("--y", type=_floats, required=True)

    geo_cmd = sub.add_parser("geodesic", parents=[common], help="測地線を積分")
    geo_cmd.add_argument("--metric", required=True)
    geo_cmd.add_argument("--x0", type=_floats, required=True)
    geo_cmd.add_argument("--y0", type=_floats, required=True)
    geo_cmd.add_argument("--t-end", type=float, default=1.0)
    geo_cmd.add_argument("--h", type=float, default=1e-3)

    conf_cmd = sub.add_parser("check-conformal", parents=[common], help="写像の共形性を検査")
    conf_cmd.add_argument("--metric", required=True)
    conf_cmd.add_argument("--target", help="省略時は --metric と同じ")
    conf_cmd.add_argument("--map", required=True)
    conf_cmd.add_argument("--sigma", default="0")
    conf_cmd.add_argument("--samples", type=int, default=200)

    field_cmd = sub.add_parser("check-field", parents=[common], help="ベクトル場の共形性を検査")
    field_cmd.add_argument("--metric", required=True)
    field_cmd.add_argument("--field", required=True)
    field_cmd.add_argument("--samples", type=int, default=20)

    verify_cmd = sub.add_parser("verify", parents=[common], help="同梱の検証スイートを実行")
    verify_cmd.add_argument("suite", nargs="?", help="スイート名 (省略時はすべて)")
    return parser


def _require_config(args: argparse.Namespace) -> ExperimentSpec:
    path = getattr(args, "path", None) or args.config
    if path is None:
        raise ConfigError([{"loc": ("config",), "msg": "--config で設定ファイルを指定してください", "type": "missing"}])
    return load_experiment(path)


def _single_probe(spec: ExperimentSpec, probe: Dict[str, Any]) -> ExperimentSpec:
    """The config's objects with its probe list replaced by ``probe``."""

    data = spec.model_dump(mode="json")
    data["probes"] = [probe]
    return parse_experiment(data)


def _finish(result: RunResult, out: Optional[Path]) -> int:
    if out is not None:
        emit(result.report, out, result.trajectories)
    sys.stdout.write(render_summary(result.report))
    return result.exit_code


def _probe_for(args: argparse.Namespace) -> Dict[str, Any]:
    if args.command == "eval":
        return {"name": "eval", "op": "eval", "args": {"metric": args.metric, "x": args.x, "y": args.y}}
    if args.command == "geodesic":
        return {
            "name": "geodesic",
            "op": "geodesic",
            "args": {"metric": args.metric, "x0": args.x0, "y0": args.y0, "t_end": args.t_end, "h": args.h},
            "export_trajectory": True,
        }
    if args.command == "check-conformal":
        return {
            "name": "check-conformal",
            "op": "conformal_residual",
            "args": {"metric": args.metric, "target": args.target or args.metric, "map": args.map, "sigma": args.sigma},
            "samples": args.samples,
        }
    return {"name": "check-field", "op": "conformal_field", "args": {"metric": args.metric, "field": args.field}, "samples": args.samples}


def _list_suites() -> int:
    for name, suite in SUITES.items():
        sys.stdout.write(f"{name:<18} {suite.description} ({len(suite.experiments)} 実験)\n")
    return EXIT_PASS


def _verify(args: argparse.Namespace) -> int:
    names = [args.suite] if args.suite else list(SUITES)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ConfigError([{"loc": ("suite",), "msg": f"未定義のスイートです: {unknown[0]}", "type": "unknown_suite"}])
    code = EXIT_PASS
    for name in names:
        for result in verify(name, seed=args.seed, jobs=args.jobs):
            out = args.out / name / result.report.name if args.out is not None else None
            code = max(code, _finish(result, out))
    return code


def dispatch(args: argparse.Namespace) -> int:
    logger.debug("command=%s config=%s", args.command, args.config)
    if args.list_suites:
        return _list_suites()
    if args.command == "verify":
        return _verify(args)
    if args.command in (None, "run"):
        spec = _require_config(args)
        return _finish(run(spec, jobs=args.jobs, seed=args.seed), args.out or Path(spec.output.directory))
    spec = _single_probe(_require_config(args), _probe_for(args))
    result = run(spec, jobs=1, seed=args.seed)
    if args.command == "eval":
        probe = result.report.probes[0]
        sys.stdout.write(json.dumps(probe.values or {"error": probe.error}, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
        if args.out is not None:
            emit(result.report, args.out, result.trajectories)
        return result.exit_code
    return _finish(result, args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return dispatch(args)
    except ConfigError as exc:
        for detail in exc.errors():
            location = ".".join(str(part) for part in detail["loc"])
            sys.stderr.write(f"設定エラー [{location}] {detail['msg']}\n")
        return EXIT_CONFIG
    except ReportIOError as exc:
        sys.stderr.write(f"出力エラー: {exc}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
