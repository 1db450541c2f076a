"""Execute the probes of an experiment and assemble the report."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from calc.conformal import VectorFieldSpec
from calc.lagrangians import (
    DiffeoSpec,
    Lagrangian,
    conformal_deform,
    make_berwald_moor,
    make_minkowski,
    make_pseudo_euclidean,
    make_weighted_product,
    pullback,
    rescale_by_field,
)
from calc.tolerances import resolve
from core import __version__
from core.expressions import parse
from core.io import config_hash
from core.probes import PROBE_SPECS, ProbeContext, ProbeOutcome, summarize
from models.experiment import (
    BerwaldMoorDef,
    ConformalDef,
    ExperimentSpec,
    MetricDef,
    MinkowskiDef,
    ProbeDef,
    ProbeResult,
    PseudoEuclideanDef,
    PullbackDef,
    Report,
    RescaledDef,
    WeightedProductDef,
)

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    report: Report
    trajectories: Dict[str, pd.DataFrame] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return self.report.exit_code


def _build_metric(definition: MetricDef, ctx: ProbeContext) -> Lagrangian:
    if isinstance(definition, PseudoEuclideanDef):
        return make_pseudo_euclidean(definition.signs)
    if isinstance(definition, MinkowskiDef):
        return make_minkowski(definition.n)
    if isinstance(definition, BerwaldMoorDef):
        return make_berwald_moor(definition.n)
    if isinstance(definition, WeightedProductDef):
        return make_weighted_product(ctx.metrics[definition.first], ctx.metrics[definition.second], definition.alpha)
    if isinstance(definition, ConformalDef):
        base = ctx.metrics[definition.base]
        return conformal_deform(base, parse(definition.sigma, base.n))
    if isinstance(definition, PullbackDef):
        return pullback(ctx.metrics[definition.base], ctx.maps[definition.map])
    if isinstance(definition, RescaledDef):
        return rescale_by_field(ctx.metrics[definition.base], ctx.fields[definition.field])
    raise TypeError(f"unsupported metric definition {type(definition).__name__}")


def build_context(spec: ExperimentSpec) -> ProbeContext:
    """Instantiate maps, fields and metrics in declaration order."""

    ctx = ProbeContext(dimension=spec.dimension)
    for item in spec.maps:
        ctx.maps[item.name] = DiffeoSpec.from_sources(item.components, kind=item.kind, inverse=item.inverse, label=item.name)
    for item in spec.fields:
        ctx.fields[item.name] = VectorFieldSpec.from_sources(item.components, label=item.name)
    for definition in spec.metrics:
        ctx.metrics[definition.name] = _build_metric(definition, ctx)
    return ctx


def probe_seed(spec: ExperimentSpec, index: int, probe: ProbeDef) -> int:
    return probe.seed if probe.seed is not None else spec.seed + index


def _json_safe(value: object) -> object:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def execute_probe(
    ctx: ProbeContext, spec: ExperimentSpec, index: int, probe: ProbeDef
) -> Tuple[ProbeResult, Dict[str, pd.DataFrame]]:
    """Run one probe; any exception is recorded on the result instead of propagating."""

    seed = probe_seed(spec, index, probe)
    tolerances = resolve({**spec.tolerances, **probe.tolerances})
    started = time.perf_counter()
    logger.info("probe %s (%s) started, seed=%d", probe.name, probe.op, seed)
    try:
        outcome: ProbeOutcome = PROBE_SPECS[probe.op].handler(ctx, probe, tolerances, seed)
    except Exception as exc:  # noqa: BLE001
        elapsed = time.perf_counter() - started
        logger.warning("probe %s failed with %s: %s", probe.name, type(exc).__name__, exc)
        result = ProbeResult(
            name=probe.name,
            op=probe.op,
            status="error",
            seed=seed,
            error=f"{type(exc).__name__}: {exc}",
            tolerances=tolerances,
            wall_time_s=elapsed,
        )
        return result, {}
    elapsed = time.perf_counter() - started
    trajectories = outcome.trajectories if probe.export_trajectory else {}
    result = ProbeResult(
        name=probe.name,
        op=probe.op,
        status="pass" if outcome.passed else "fail",
        verdict=outcome.verdict,
        seed=seed,
        statistics={key: summarize(values) for key, values in outcome.series.items()},
        values=_json_safe(outcome.values),  # type: ignore[arg-type]
        witness=_json_safe(outcome.witness),  # type: ignore[arg-type]
        tolerances=tolerances,
        notes=outcome.notes,
        trajectory_file=", ".join(f"{name}.csv" for name in sorted(trajectories)) or None,
        wall_time_s=elapsed,
    )
    logger.info("probe %s finished: %s (%s) in %.2fs", probe.name, result.status, result.verdict, elapsed)
    return result, trajectories


def run(spec: ExperimentSpec, *, jobs: Optional[int] = None, seed: Optional[int] = None) -> RunResult:
    """Execute every probe; results keep the declared probe order whatever ``jobs`` is."""

    if seed is not None:
        spec = spec.model_copy(update={"seed": int(seed)})
    workers = max(1, int(jobs if jobs is not None else spec.jobs))
    ctx = build_context(spec)
    indexed = list(enumerate(spec.probes))
    if workers == 1 or len(indexed) < 2:
        outcomes = [execute_probe(ctx, spec, index, probe) for index, probe in indexed]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda item: execute_probe(ctx, spec, *item), indexed))
    results: List[ProbeResult] = []
    trajectories: Dict[str, pd.DataFrame] = {}
    for result, frames in outcomes:
        results.append(result)
        trajectories.update(frames)
    report = Report(
        name=spec.name,
        config_hash=config_hash(spec),
        library_version=__version__,
        seed=spec.seed,
        generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        probes=results,
    )
    return RunResult(report=report, trajectories=trajectories)


__all__ = [
    "RunResult",
    "build_context",
    "probe_seed",
    "execute_probe",
    "run",
]
