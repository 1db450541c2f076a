"""Registry of probe operations runnable from an experiment config.

Each entry in :data:`PROBE_SPECS` names the handler, the arguments it needs and
which of them refer to declared metrics, maps or fields, so configs can be
checked before anything is computed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from calc import conformal as cf
from calc import finsler as fg
from calc import geodesics as geo
from calc.autodiff import fd_check, jet_eval
from calc.conformal import VectorFieldSpec
from calc.lagrangians import DiffeoSpec, Lagrangian, conformal_deform, sample_admissible
from core.expressions import Expr, parse
from models.errors import DegenerateMetric, GeometryError, InconclusiveSampling, SamplingExhausted
from models.experiment import ProbeDef
from models.geometry import OrderMask

logger = logging.getLogger(__name__)

DEFAULT_BOX: Tuple[float, float] = (0.5, 1.5)
# Either scalar bounds shared by every axis or per-axis arrays.
Box = Tuple[Any, Any]

# Argument name → kind of declared object it refers to.
REFERENCE_ARGS: Dict[str, str] = {"metric": "metrics", "target": "metrics", "map": "maps", "field": "fields"}
# Arguments holding x-only expressions, parsed in the probe metric's dimension.
EXPRESSION_ARGS: Tuple[str, ...] = ("sigma", "expected", "expected_mu")


@dataclass
class ProbeContext:
    """Objects built from an experiment config, shared read-only by all probes."""

    dimension: int
    metrics: Dict[str, Lagrangian] = field(default_factory=dict)
    maps: Dict[str, DiffeoSpec] = field(default_factory=dict)
    fields: Dict[str, VectorFieldSpec] = field(default_factory=dict)


@dataclass
class ProbeOutcome:
    passed: bool
    verdict: str
    series: Dict[str, Sequence[float]] = field(default_factory=dict)
    values: Dict[str, Any] = field(default_factory=dict)
    witness: Optional[Dict[str, Any]] = None
    notes: List[str] = field(default_factory=list)
    trajectories: Dict[str, pd.DataFrame] = field(default_factory=dict)


Handler = Callable[[ProbeContext, ProbeDef, Dict[str, float], int], ProbeOutcome]


@dataclass(frozen=True)
class ProbeSpec:
    handler: Handler
    required: Tuple[str, ...]
    description: str


# ---------------------------------------------------------------------------
# Shared helpers


def summarize(values: Sequence[float]) -> Dict[str, float]:
    """Residual statistics: count, max, mean and the 50/90/99% quantiles."""

    series = pd.Series(np.asarray(values, dtype=float))
    if series.empty:
        return {"count": 0.0}
    quantiles = series.quantile([0.5, 0.9, 0.99])
    return {
        "count": float(series.size),
        "max": float(series.max()),
        "mean": float(series.mean()),
        "p50": float(quantiles.loc[0.5]),
        "p90": float(quantiles.loc[0.9]),
        "p99": float(quantiles.loc[0.99]),
    }


def _metric(ctx: ProbeContext, probe: ProbeDef, key: str = "metric") -> Lagrangian:
    return ctx.metrics[probe.args[key]]


def _expr(probe: ProbeDef, key: str, n: int, default: str | None = None) -> Expr:
    source = probe.args.get(key, default)
    if source is None:
        raise KeyError(key)
    return parse(str(source), n)


def _vector(probe: ProbeDef, key: str) -> np.ndarray:
    return np.asarray(probe.args[key], dtype=float)


def _box(probe: ProbeDef) -> Box:
    """``[low, high]`` for every axis, or one ``[low, high]`` pair per axis."""

    bounds = probe.args.get("box", DEFAULT_BOX)
    if bounds and isinstance(bounds[0], (list, tuple)):
        array = np.asarray(bounds, dtype=float)
        return array[:, 0], array[:, 1]
    low, high = bounds
    return float(low), float(high)


def _child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**31))


def draw_points(L: Lagrangian, count: int, seed: int, box: Box = DEFAULT_BOX) -> List[Tuple[np.ndarray, np.ndarray]]:
    """``count`` seeded (x, y) pairs with x uniform in the box and y admissible at x."""

    rng = np.random.default_rng(seed)
    points = []
    for _ in range(count):
        x = rng.uniform(box[0], box[1], L.n)
        y = sample_admissible(L, x, 1, _child_seed(rng))[0]
        points.append((x, y))
    return points


def draw_base_points(n: int, count: int, seed: int, box: Box = DEFAULT_BOX) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.uniform(box[0], box[1], n) for _ in range(count)]


def null_starts(
    L: Lagrangian, count: int, seed: int, box: Box = DEFAULT_BOX, tol: float | None = None
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Seeded null initial data: bisect between a timelike and a spacelike draw."""

    rng = np.random.default_rng(seed)
    starts: List[Tuple[np.ndarray, np.ndarray]] = []
    attempts = 0
    while len(starts) < count:
        attempts += 1
        if attempts > 50 * count:
            raise SamplingExhausted(f"{L.label}: no null directions found after {attempts} base points")
        x = rng.uniform(box[0], box[1], L.n)
        draws = sample_admissible(L, x, 16, _child_seed(rng))
        timelike = [y for y in draws if L.value(x, y) > 0]
        spacelike = [y for y in draws if L.value(x, y) < 0]
        if not timelike or not spacelike:
            continue
        try:
            y = geo.null_direction(L, x, timelike[0], spacelike[0], tol)
        except (GeometryError, ValueError) as exc:
            logger.debug("null start skipped: %s", exc)
            continue
        starts.append((x, y / np.linalg.norm(y)))
    return starts


def timelike_starts(
    L: Lagrangian, count: int, seed: int, box: Box = DEFAULT_BOX
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """The most timelike of 16 seeded draws at each base point."""

    rng = np.random.default_rng(seed)
    starts: List[Tuple[np.ndarray, np.ndarray]] = []
    attempts = 0
    while len(starts) < count:
        attempts += 1
        if attempts > 50 * count:
            raise SamplingExhausted(f"{L.label}: no timelike directions found after {attempts} base points")
        x = rng.uniform(box[0], box[1], L.n)
        draws = sample_admissible(L, x, 16, _child_seed(rng))
        scores = [L.value(x, y) / float(y @ y) for y in draws]
        best = int(np.argmax(scores))
        if scores[best] > 0:
            starts.append((x, draws[best]))
    return starts


def _rel(value: float, scale: float) -> float:
    return abs(value) / max(1.0, abs(scale))


def _point_dict(x: Sequence[float], y: Sequence[float] | None = None, **extra: Any) -> Dict[str, Any]:
    record: Dict[str, Any] = {"x": [float(v) for v in x]}
    if y is not None:
        record["y"] = [float(v) for v in y]
    record.update(extra)
    return record


# ---------------------------------------------------------------------------
# Handlers


def probe_eval(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    x, y = _vector(probe, "x"), _vector(probe, "y")
    character = fg.causal_character(L, x, y, tol["null"])
    metric = fg.metric_tensor(L, x, y)
    result = fg.spray(L, x, y, connection=True)
    values: Dict[str, Any] = {
        "L": character.L_value,
        "g": metric.g.tolist(),
        "g_inv": metric.g_inv.tolist(),
        "signature": list(metric.signature),
        "det": metric.det,
        "G2": result.G2.tolist(),
        "Gcoeff": result.Gcoeff.tolist(),
    }
    if character.tag != "null":
        values["h"] = fg.angular_metric(L, x, y, tol["null"]).h.tolist()
    return ProbeOutcome(passed=True, verdict=character.tag, values=values, notes=list(metric.notes))


def probe_fd_check(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    mask = OrderMask(int(probe.args.get("x_order", 1)), int(probe.args.get("y_order", 2)))
    discrepancies = [fd_check(L.field, x, y, mask).max_relative for x, y in draw_points(L, probe.samples, seed, _box(probe))]
    worst = max(discrepancies)
    passed = worst <= tol["fd"]
    return ProbeOutcome(passed=passed, verdict="match" if passed else "mismatch", series={"discrepancy": discrepancies})


def probe_homogeneity(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    """Scaling, Euler and contraction identities; angular-metric identities off the cone."""

    L = _metric(ctx, probe)
    scaling: List[float] = []
    euler: List[float] = []
    contraction: List[float] = []
    angular: List[float] = []
    trace: List[float] = []
    degenerate = 0
    for x, y in draw_points(L, probe.samples, seed, _box(probe)):
        jet = jet_eval(L.field, x, y, OrderMask(0, 2))
        value = jet.value
        scaling.append(_rel(L.value(x, 2.0 * y) - 4.0 * value, value))
        euler.append(_rel(float(jet.require("dy") @ y) - 2.0 * value, value))
        g = 0.5 * jet.require("dydy")
        contraction.append(_rel(float(y @ g @ y) - value, value))
        if abs(value) > tol["null"] * fg.direction_scale(y):
            try:
                h = fg.angular_metric(L, x, y, tol["null"])
            except DegenerateMetric:
                # angular checks need g⁻¹
                degenerate += 1
                continue
            scale = max(1.0, float(np.max(np.abs(g)))) * float(np.linalg.norm(y))
            angular.append(float(np.max(np.abs(h.h @ y))) / scale)
            trace.append(abs(float(np.sum(h.h_upper * g)) - (L.n - 1)))
    passed = (
        max(scaling) <= tol["homogeneity"]
        and max(euler) <= tol["homogeneity"]
        and max(contraction) <= tol["homogeneity"]
        and max(angular, default=0.0) <= tol["angular"]
        and max(trace, default=0.0) <= tol["angular_trace"]
    )
    return ProbeOutcome(
        passed=passed,
        verdict="homogeneous" if passed else "violated",
        values={"angular_samples": len(angular), "degenerate_skipped": degenerate},
        series={"scaling": scaling, "euler": euler, "contraction": contraction, "angular": angular, "angular_trace": trace},
    )


def probe_horizontal(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    defects = []
    for x, y in draw_points(L, probe.samples, seed, _box(probe)):
        defect = fg.horizontal_defect(L, x, y)
        defects.append(float(np.max(np.abs(defect))) / max(1.0, abs(L.value(x, y))))
    passed = max(defects) <= tol["horizontal"]
    return ProbeOutcome(passed=passed, verdict="horizontal" if passed else "violated", series={"defect": defects})


def probe_structure(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    profile = fg.structure_profile(L, draw_points(L, probe.samples, seed, _box(probe)))
    values = profile.model_dump()
    expected = probe.args.get("signature")
    passed = expected is None or tuple(expected) == profile.signature
    verdict = "finsler-spacetime" if profile.finsler_spacetime else f"signature {profile.signature}"
    return ProbeOutcome(passed=passed, verdict=verdict, values=values, notes=list(L.notes))


def probe_geodesic(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    traj = geo.integrate_geodesic(
        L, _vector(probe, "x0"), _vector(probe, "y0"), float(probe.args.get("t_end", 1.0)), float(probe.args.get("h", 1e-3)), label=probe.name
    )
    drift = geo.energy_drift(traj, L)
    values = {
        "samples": len(traj),
        "truncated": traj.truncated,
        "reason": traj.reason,
        "class": geo.classify_curve(traj, L, tol["null"]),
        "arc_length": geo.arc_length(traj, L),
        "energy_drift": drift,
        "end": traj.x[-1].tolist(),
    }
    notes = [traj.reason] if traj.reason else []
    return ProbeOutcome(
        passed=drift <= tol["energy"],
        verdict=str(values["class"]),
        values=values,
        notes=notes,
        trajectories={probe.name: geo.trajectory_frame(traj, L)},
    )


def probe_conformal_residual(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    Lp = _metric(ctx, probe, "target")
    f = ctx.maps[probe.args["map"]]
    sigma = _expr(probe, "sigma", L.n, "0")
    verdict = cf.conformal_residual(L, Lp, f, sigma, draw_points(L, probe.samples, seed, _box(probe)), tol)
    expect = probe.args.get("expect", "conformal")
    notes = [f"skipped {verdict.skipped} samples outside A"] if verdict.skipped else []
    return ProbeOutcome(
        passed=verdict.verdict == expect,
        verdict=verdict.verdict,
        series={"sigma": verdict.factors},
        values={
            "max_residual": verdict.max_residual,
            "anisotropy": verdict.anisotropy,
            "map_class": verdict.map_class,
            "skipped": verdict.skipped,
        },
        notes=notes + list(L.notes),
    )


def probe_conformal_factor(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    """σ̂(x) from sampled directions, compared with a closed-form expectation."""

    L = _metric(ctx, probe)
    Lp = _metric(ctx, probe, "target")
    f = ctx.maps[probe.args["map"]]
    expected = _expr(probe, "expected", L.n)
    per_point = int(probe.args.get("directions", 8))
    errors: List[float] = []
    anisotropy: List[float] = []
    rng = np.random.default_rng(seed)
    worst: Optional[Dict[str, Any]] = None
    for x in draw_base_points(L.n, probe.samples, _child_seed(rng), _box(probe)):
        ys = sample_admissible(L, x, per_point, _child_seed(rng))
        estimate = cf.estimate_conformal_factor(L, Lp, f, x, ys, tol)
        target = float(expected.evaluate_xy(list(x)))
        error = abs(estimate.sigma - target)
        if not errors or error > max(errors):
            worst = _point_dict(x, sigma_hat=estimate.sigma, sigma=target)
        errors.append(error)
        anisotropy.append(estimate.anisotropy)
    passed = max(errors) <= tol["sigma_match"] and max(anisotropy) <= tol["anisotropy"]
    return ProbeOutcome(
        passed=passed,
        verdict="conformal" if passed else "not-conformal",
        series={"sigma_error": errors, "anisotropy": anisotropy},
        witness=worst,
        notes=list(L.notes),
    )


def probe_lie_derivative(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    xi = ctx.fields[probe.args["field"]]
    gaps = []
    for x, y in draw_points(L, probe.samples, seed, _box(probe)):
        exact = cf.lie_derivative_L(L, xi, x, y)
        oracle = cf.lie_derivative_fd(L, xi, x, y)
        gaps.append(_rel(exact - oracle, exact))
    passed = max(gaps) <= tol["fd"]
    return ProbeOutcome(passed=passed, verdict="match" if passed else "mismatch", series={"relative_gap": gaps})


def probe_conformal_field(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    xi = ctx.fields[probe.args["field"]]
    bases = draw_base_points(L.n, probe.samples, seed, _box(probe))
    verdict = cf.conformal_field_report(L, xi, bases, int(probe.args.get("directions", 8)), seed, tol)
    expect = probe.args.get("expect")
    passed = verdict.verdict != "not-conformal" and (expect is None or verdict.verdict == expect)
    series: Dict[str, Sequence[float]] = {"mu": verdict.factors}
    if "expected_mu" in probe.args:
        mu = _expr(probe, "expected_mu", L.n)
        gaps = [abs(m - float(mu.evaluate_xy(list(x)))) for m, x in zip(verdict.factors, bases)]
        series["mu_error"] = gaps
        passed = passed and max(gaps) <= tol["killing"]
    return ProbeOutcome(
        passed=passed,
        verdict=verdict.verdict,
        series=series,
        values={
            "max_residual": verdict.max_residual,
            "anisotropy": verdict.anisotropy,
            "on_cone_max": verdict.on_cone_max,
            "skipped": verdict.skipped,
            "anisotropic_points": [list(p) for p in verdict.anisotropic_points],
        },
    )


def probe_spray_relation(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    sigma = _expr(probe, "sigma", L.n)
    residuals = [cf.spray_relation_residual(L, sigma, x, y) for x, y in draw_points(L, probe.samples, seed, _box(probe))]
    passed = max(residuals) <= tol["spray_relation"]
    return ProbeOutcome(passed=passed, verdict="holds" if passed else "violated", series={"residual": residuals})


def probe_weyl(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    sigma = _expr(probe, "sigma", L.n)
    try:
        report = cf.weyl_probe(L, sigma, draw_points(L, probe.samples, seed, _box(probe)), tol)
    except InconclusiveSampling as exc:
        return ProbeOutcome(passed=False, verdict="inconclusive", notes=[str(exc)])
    witness = report.witness.model_dump() if report.witness else None
    verdict = "unchanged-spray" if report.constant_sigma else "witness found"
    return ProbeOutcome(
        passed=report.passed,
        verdict=verdict,
        values={"max_transverse": report.max_transverse, "max_defect": report.max_defect, "samples": report.samples},
        witness=witness,
    )


def _trajectory_args(probe: ProbeDef) -> Tuple[float, float]:
    return float(probe.args.get("t_end", 1.0)), float(probe.args.get("h", 1e-3))


def probe_null_geodesics(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    """Null geodesics of L and e^σ L share their images; a timelike control does not."""

    L = _metric(ctx, probe)
    deformed = conformal_deform(L, _expr(probe, "sigma", L.n))
    t_end, h = _trajectory_args(probe)
    rng = np.random.default_rng(seed)
    distances: List[float] = []
    trajectories: Dict[str, pd.DataFrame] = {}
    for index, (x, y) in enumerate(null_starts(L, int(probe.args.get("starts", 10)), _child_seed(rng), _box(probe))):
        first = geo.integrate_geodesic(L, x, y, t_end, h)
        second = geo.integrate_geodesic(deformed, x, y, t_end, h)
        distances.append(geo.reparam_compare(first, second))
        if probe.export_trajectory and index == 0:
            trajectories[f"{probe.name}_base"] = geo.trajectory_frame(first, L)
            trajectories[f"{probe.name}_deformed"] = geo.trajectory_frame(second, deformed)
    controls: List[float] = []
    for x, y in timelike_starts(L, int(probe.args.get("controls", 1)), _child_seed(rng), _box(probe)):
        first = geo.integrate_geodesic(L, x, y, t_end, h)
        second = geo.integrate_geodesic(deformed, x, y, t_end, h)
        controls.append(geo.reparam_compare(first, second))
    passed = max(distances) <= tol["image"] and (not controls or max(controls) >= tol["timelike_gap"])
    return ProbeOutcome(
        passed=passed,
        verdict="images coincide" if passed else "images differ",
        series={"null_distance": distances, "timelike_distance": controls},
        trajectories=trajectories,
    )


def probe_conservation(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    """g(ċ, ξ) along null geodesics, with the step-halving drift ratio."""

    L = _metric(ctx, probe)
    xi = ctx.fields[probe.args["field"]]
    t_end, h = _trajectory_args(probe)
    drifts: List[float] = []
    ratios: List[float] = []
    trajectories: Dict[str, pd.DataFrame] = {}
    for index, (x, y) in enumerate(null_starts(L, int(probe.args.get("starts", 10)), seed, _box(probe))):
        coarse = geo.integrate_geodesic(L, x, y, t_end, h)
        fine = geo.integrate_geodesic(L, x, y, t_end, h / 2.0)
        drift = cf.conservation_along_null(L, xi, coarse)
        drift_fine = cf.conservation_along_null(L, xi, fine)
        drifts.append(drift)
        if drift_fine > tol["conservation_floor"] and drift > 0.0:
            ratios.append(drift_fine / drift)
        if probe.export_trajectory and index == 0:
            trajectories[probe.name] = geo.trajectory_frame(coarse, L)
    passed = max(drifts) <= tol["conservation"] and all(r <= tol["conservation_ratio"] for r in ratios)
    notes = [] if ratios else ["drift below floor at every start; ratio check skipped"]
    return ProbeOutcome(
        passed=passed,
        verdict="conserved" if passed else "drifting",
        series={"drift": drifts, "halving_ratio": ratios},
        notes=notes,
        trajectories=trajectories,
    )


def probe_energy(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    t_end, h = _trajectory_args(probe)
    order_h = float(probe.args.get("order_h", 0.05))
    drifts: List[float] = []
    ratios: List[float] = []
    for x, y in draw_points(L, int(probe.args.get("starts", 5)), seed, _box(probe)):
        drifts.append(geo.energy_drift(geo.integrate_geodesic(L, x, y, t_end, h), L))
        coarse = geo.energy_drift(geo.integrate_geodesic(L, x, y, t_end, order_h), L)
        fine = geo.energy_drift(geo.integrate_geodesic(L, x, y, t_end, order_h / 2.0), L)
        if fine > tol["energy_floor"]:
            ratios.append(coarse / fine)
    in_range = all(tol["order_low"] <= r <= tol["order_high"] for r in ratios)
    passed = max(drifts) <= tol["energy"] and in_range
    notes = [] if ratios else ["drift below floor; order check skipped"]
    return ProbeOutcome(
        passed=passed,
        verdict="conserved" if passed else "drifting",
        series={"drift": drifts, "halving_ratio": ratios},
        notes=notes,
    )


def probe_associated_metric(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    g_xi = cf.associated_metric(L, ctx.fields[probe.args["field"]])
    signatures = []
    mismatches = []
    for x in draw_base_points(L.n, probe.samples, seed, _box(probe)):
        value = g_xi.evaluate(x)
        signatures.append(value.signature)
        if L.signature is not None and value.signature != L.signature:
            mismatches.append(_point_dict(x, signature=list(value.signature)))
    passed = not mismatches
    return ProbeOutcome(
        passed=passed,
        verdict="signature preserved" if passed else "signature changed",
        values={"signatures": [list(s) for s in sorted(set(signatures))]},
        witness=mismatches[0] if mismatches else None,
    )


def probe_associated_lemma(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    xi = ctx.fields[probe.args["field"]]
    eps_values = [float(e) for e in probe.args.get("eps", [0.05, 0.1, 0.2])]
    bases = draw_base_points(L.n, probe.samples, seed, _box(probe))
    report = cf.associated_lemma_probe(L, xi, eps_values, bases, int(probe.args.get("directions", 8)), seed, tol)
    return ProbeOutcome(
        passed=report.passed,
        verdict="factors agree" if report.passed else "factors differ",
        series={"factor_gap": [e.factor_gap for e in report.entries], "proportionality": [e.proportionality for e in report.entries]},
        values={"entries": [e.model_dump() for e in report.entries], "max_gap": report.max_gap},
    )


def _grid(probe: ProbeDef, n: int) -> List[np.ndarray]:
    spec = probe.args.get("grid", {})
    low = float(spec.get("low", 0.25))
    high = float(spec.get("high", 2.0))
    count = int(spec.get("count", 8))
    axis = np.linspace(low, high, count)
    return [np.array(point) for point in product(axis, repeat=n)]


def probe_essential_scan(ctx: ProbeContext, probe: ProbeDef, tol: Dict[str, float], seed: int) -> ProbeOutcome:
    L = _metric(ctx, probe)
    xi = ctx.fields[probe.args["field"]]
    scan = cf.essential_scan(L, xi, _grid(probe, L.n), int(probe.args.get("directions", 6)), seed, tol)
    expect_null = probe.args.get("expect_null")
    if scan.essential_candidate:
        verdict = "essential-candidate"
        passed = expect_null is None or bool(expect_null)
    else:
        verdict = "killing-after-rescaling" if scan.killing_after_rescaling else "not-killing-after-rescaling"
        passed = scan.killing_after_rescaling and not expect_null
    values: Dict[str, Any] = {
        "alpha_min": scan.alpha_min,
        "alpha_max": scan.alpha_max,
        "null_points": [list(p) for p in scan.null_points],
        "not_admissible": [list(p) for p in scan.not_admissible],
        "tags": {tag: scan.tags.count(tag) for tag in sorted(set(scan.tags))},
    }
    series: Dict[str, Sequence[float]] = {}
    if scan.rescaled_verdict is not None:
        series["mu_rescaled"] = [abs(m) for m in scan.rescaled_verdict.factors]
    witness = {"x": list(scan.null_points[0])} if scan.null_points else None
    return ProbeOutcome(passed=passed, verdict=verdict, series=series, values=values, witness=witness)


PROBE_SPECS: Dict[str, ProbeSpec] = {
    "eval": ProbeSpec(probe_eval, ("metric", "x", "y"), "一点での幾何量の出力"),
    "fd_check": ProbeSpec(probe_fd_check, ("metric",), "自動微分と有限差分の照合"),
    "homogeneity": ProbeSpec(probe_homogeneity, ("metric",), "斉次性・Euler 恒等式・角計量"),
    "horizontal": ProbeSpec(probe_horizontal, ("metric",), "L の水平微分の消滅"),
    "structure": ProbeSpec(probe_structure, ("metric",), "符号数と構造フラグ"),
    "geodesic": ProbeSpec(probe_geodesic, ("metric", "x0", "y0"), "単一測地線の積分"),
    "conformal_residual": ProbeSpec(probe_conformal_residual, ("metric", "target", "map"), "写像の共形残差"),
    "conformal_factor": ProbeSpec(probe_conformal_factor, ("metric", "target", "map", "expected"), "共形因子の推定と閉形式の比較"),
    "lie_derivative": ProbeSpec(probe_lie_derivative, ("metric", "field"), "完全リフトと流れ差分の照合"),
    "conformal_field": ProbeSpec(probe_conformal_field, ("metric", "field"), "共形ベクトル場の判定"),
    "spray_relation": ProbeSpec(probe_spray_relation, ("metric", "sigma"), "共形変形のスプレー関係式"),
    "weyl": ProbeSpec(probe_weyl, ("metric", "sigma"), "射影性の反例探索"),
    "null_geodesics": ProbeSpec(probe_null_geodesics, ("metric", "sigma"), "光的測地線の像の保存"),
    "conservation": ProbeSpec(probe_conservation, ("metric", "field"), "光的測地線に沿った保存量"),
    "energy": ProbeSpec(probe_energy, ("metric",), "測地線に沿った L の保存と RK4 の次数"),
    "associated_metric": ProbeSpec(probe_associated_metric, ("metric", "field"), "随伴計量の符号数"),
    "associated_lemma": ProbeSpec(probe_associated_lemma, ("metric", "field"), "随伴計量の共形因子"),
    "essential_scan": ProbeSpec(probe_essential_scan, ("metric", "field"), "ξ の因果的性質と再スケール"),
}


def missing_arguments(op: str, args: Mapping[str, Any]) -> List[str]:
    return [name for name in PROBE_SPECS[op].required if name not in args]


__all__ = [
    "DEFAULT_BOX",
    "REFERENCE_ARGS",
    "EXPRESSION_ARGS",
    "ProbeContext",
    "ProbeOutcome",
    "ProbeSpec",
    "PROBE_SPECS",
    "summarize",
    "draw_points",
    "draw_base_points",
    "null_starts",
    "timelike_starts",
    "missing_arguments",
]
