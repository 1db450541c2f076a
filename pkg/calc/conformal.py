"""Conformal maps and conformal vector fields: residuals, factors, Lie derivatives and probes."""
from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np

from calc import autodiff as ad
from calc.autodiff import ScalarField, jacobian_matrix, jet_eval, primal
from calc.finsler import direction_scale, metric_tensor, spray
from calc.geodesics import null_direction, rk4_step
from calc.lagrangians import (
    Lagrangian,
    conformal_deform,
    field_norm,
    pullback,
    rescale_by_field,
    sample_admissible,
)
from calc.tolerances import FLOW_FD_STEP, FLOW_SUBSTEPS, resolve
from core.expressions import Expr, free_vars, is_constant, parse
from models.errors import (
    AllSamplesNull,
    FlowBlowup,
    GeometryError,
    InconclusiveSampling,
    NotAdmissible,
    NotConformalAt,
    NotNull,
)
from models.geometry import (
    ConformalVerdict,
    EssentialScan,
    FactorEstimate,
    LemmaEntry,
    LemmaReport,
    MapClass,
    MetricValue,
    OrderMask,
    SprayDefect,
    Trajectory,
    WeylReport,
    Witness,
)

logger = logging.getLogger(__name__)

Point = Tuple[Sequence[float], Sequence[float]]


class PointMap(Protocol):
    n: int
    label: str

    def apply(self, x: Sequence[Any]) -> List[Any]: ...

    def jacobian(self, x: Sequence[float]) -> Any: ...


@dataclass(frozen=True)
class VectorFieldSpec:
    """Vector field ξ on M with components given by x-expressions."""

    n: int
    components: Tuple[Expr, ...]
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.components) != self.n:
            raise ValueError(f"expected {self.n} components, got {len(self.components)}")
        for index, component in enumerate(self.components):
            if any(name.startswith("y") for name in free_vars(component)):
                raise ValueError(f"component {index} depends on a direction variable")

    @classmethod
    def from_sources(cls, sources: Sequence[str], label: str = "") -> "VectorFieldSpec":
        n = len(sources)
        return cls(n=n, components=tuple(parse(src, n) for src in sources), label=label or ", ".join(sources))

    def apply(self, x: Sequence[Any]) -> List[Any]:
        return [component.evaluate_xy(x) for component in self.components]

    def at(self, x: Sequence[float]) -> np.ndarray:
        return np.array([float(primal(v)) for v in self.apply([float(v) for v in x])])

    def derivative(self, x: Sequence[float]) -> np.ndarray:
        """∂ξ^i/∂x^j; no invertibility requirement, unlike map Jacobians."""

        _, rows = jacobian_matrix(self.apply, [float(v) for v in x], self.n)
        return np.array([[float(primal(entry)) for entry in row] for row in rows])


def _key(x: Sequence[float]) -> Tuple[float, ...]:
    return tuple(float(v) for v in x)


# ---------------------------------------------------------------------------
# Flows


def flow(xi: VectorFieldSpec, x0: Sequence[Any], eps: float, substeps: int = FLOW_SUBSTEPS) -> List[Any]:
    """φ_eps(x0) by RK4 with step eps/substeps; generic over the scalar type of ``x0``."""

    state = list(x0)
    if eps == 0:
        return state
    h = eps / substeps
    limit = resolve()["flow_blowup"]
    for _ in range(substeps):
        state = rk4_step(xi.apply, state, h)
        size = float(np.linalg.norm([float(primal(v)) for v in state]))
        if not np.isfinite(size) or size > limit:
            raise FlowBlowup(f"flow of {xi.label} exceeded ‖x‖ = {limit:g}")
    return state


@dataclass(frozen=True)
class FlowMap:
    """The time-``eps`` map of a vector field, usable wherever a map is accepted."""

    xi: VectorFieldSpec
    eps: float

    @property
    def n(self) -> int:
        return self.xi.n

    @property
    def label(self) -> str:
        return f"flow({self.xi.label}, ε={self.eps:g})"

    def apply(self, x: Sequence[Any]) -> List[Any]:
        return flow(self.xi, x, self.eps)

    def jacobian(self, x: Sequence[float]):
        return ad.jacobian(self, x)


def flow_map(xi: VectorFieldSpec, eps: float) -> FlowMap:
    return FlowMap(xi=xi, eps=float(eps))


# ---------------------------------------------------------------------------
# Conformal maps


def _sigma_at(sigma: Expr, x: Sequence[float]) -> float:
    return float(primal(sigma.evaluate_xy([float(v) for v in x])))


def classify_map(sigma: Expr, sigma_values: Sequence[float], tol: float) -> MapClass:
    """Isometry when the factor is identically 1 (σ ≡ 0), similarity when σ is constant."""

    values = np.asarray(sigma_values, dtype=float)
    if values.size and float(np.max(np.abs(values))) <= tol:
        return "isometry"
    if is_constant(sigma) or (values.size and float(np.ptp(values)) <= tol):
        return "similarity"
    return "general"


def _group_by_base(points: Sequence[Point]) -> "OrderedDict[Tuple[float, ...], List[np.ndarray]]":
    groups: "OrderedDict[Tuple[float, ...], List[np.ndarray]]" = OrderedDict()
    for x, y in points:
        groups.setdefault(_key(x), []).append(np.asarray(y, dtype=float))
    return groups


def conformal_residual(
    L: Lagrangian,
    Lp: Lagrangian,
    f: PointMap,
    sigma: Expr,
    points: Sequence[Point],
    tolerances: Mapping[str, float] | None = None,
) -> ConformalVerdict:
    """max |Lp(f(x), Df·y) − e^{σ(x)} L(x, y)| / max(1, |L|) over admissible samples."""

    tol = resolve(tolerances)
    pulled = pullback(Lp, f)
    residuals: List[float] = []
    skipped = 0
    sigma_values: Dict[Tuple[float, ...], float] = {}
    log_ratios: Dict[Tuple[float, ...], List[float]] = {}
    for x, y in points:
        if not (L.is_admissible(x, y) and pulled.is_admissible(x, y)):
            skipped += 1
            continue
        base = _key(x)
        value = L.value(x, y)
        target = pulled.value(x, y)
        s = sigma_values.setdefault(base, _sigma_at(sigma, x))
        residuals.append(abs(target - np.exp(s) * value) / max(1.0, abs(value)))
        if abs(value) > tol["null"] * direction_scale(y) and target / value > 0:
            log_ratios.setdefault(base, []).append(float(np.log(target / value)))
    if skipped:
        logger.debug("conformal_residual: %d samples outside A skipped", skipped)
    anisotropy, offenders = _spread(log_ratios, tol["anisotropy"])
    max_residual = max(residuals) if residuals else 0.0
    conformal = bool(residuals) and max_residual <= tol["residual"] and anisotropy <= tol["anisotropy"]
    return ConformalVerdict(
        max_residual=float(max_residual),
        factors=tuple(sigma_values.values()),
        anisotropy=anisotropy,
        verdict="conformal" if conformal else "not-conformal",
        tolerances={"residual": tol["residual"], "anisotropy": tol["anisotropy"]},
        skipped=skipped,
        map_class=classify_map(sigma, list(sigma_values.values()), tol["residual"]),
        anisotropic_points=tuple(offenders),
    )


def _spread(estimates: Mapping[Tuple[float, ...], Sequence[float]], tol: float | None = None):
    worst = 0.0
    offenders: List[Tuple[float, ...]] = []
    for base, values in estimates.items():
        if len(values) < 2:
            continue
        deviation = float(np.max(np.abs(np.asarray(values) - np.mean(values))))
        worst = max(worst, deviation)
        if tol is not None and deviation > tol:
            offenders.append(base)
    return worst, offenders


def estimate_conformal_factor(
    L: Lagrangian,
    Lp: Lagrangian,
    f: PointMap,
    x: Sequence[float],
    y_samples: Sequence[Sequence[float]],
    tolerances: Mapping[str, float] | None = None,
) -> FactorEstimate:
    """σ̂(x) = mean over y of ln(Lp(f(x), Df·y) / L(x, y)) with its y-anisotropy."""

    tol = resolve(tolerances)
    pulled = pullback(Lp, f)
    estimates: List[float] = []
    skipped = 0
    for y in y_samples:
        value = L.value(x, y)
        if abs(value) <= tol["null"] * direction_scale(y):
            skipped += 1
            continue
        ratio = pulled.value(x, y) / value
        if ratio <= 0:
            raise NotConformalAt(f"ratio {ratio:.3e} ≤ 0 at y={list(y)}", point=x)
        estimates.append(float(np.log(ratio)))
    if not estimates:
        raise AllSamplesNull(f"all {len(y_samples)} samples are null at x={list(x)}")
    sigma_hat = float(np.mean(estimates))
    anisotropy = float(np.max(np.abs(np.asarray(estimates) - sigma_hat)))
    if anisotropy > tol["anisotropy"]:
        raise NotConformalAt(f"factor varies with y by {anisotropy:.3e}", point=x)
    return FactorEstimate(sigma=sigma_hat, anisotropy=anisotropy, used=len(estimates), skipped=skipped)


# ---------------------------------------------------------------------------
# Conformal vector fields


def lie_derivative_L(L: Lagrangian, xi: VectorFieldSpec, x: Sequence[float], y: Sequence[float]) -> float:
    """𝓛_{ξ^c} L = ξ^i L_{,i} + (∂ξ^i/∂x^j) y^j L_{·i}."""

    if not L.is_admissible(x, y):
        raise NotAdmissible(f"{L.label}: point outside A")
    jet = jet_eval(L.field, x, y, OrderMask(1, 1))
    yv = np.asarray(y, dtype=float)
    return float(xi.at(x) @ jet.require("dx") + (xi.derivative(x) @ yv) @ jet.require("dy"))


def lie_derivative_fd(
    L: Lagrangian, xi: VectorFieldSpec, x: Sequence[float], y: Sequence[float], step: float = FLOW_FD_STEP
) -> float:
    """d/dε|₀ L(φ_ε(x), Dφ_ε(x)·y) by a centered difference in ε."""

    forward = pullback(L, flow_map(xi, step)).value(x, y)
    backward = pullback(L, flow_map(xi, -step)).value(x, y)
    return (forward - backward) / (2.0 * step)


def _null_samples(L: Lagrangian, x: Sequence[float], samples: Sequence[np.ndarray], tol: float) -> List[np.ndarray]:
    values = [L.value(x, y) for y in samples]
    timelike = [y for y, v in zip(samples, values) if v > tol * direction_scale(y)]
    spacelike = [y for y, v in zip(samples, values) if v < -tol * direction_scale(y)]
    found: List[np.ndarray] = []
    for yt, ys in zip(timelike, spacelike):
        try:
            found.append(null_direction(L, x, yt, ys))
        except (GeometryError, ValueError) as exc:
            logger.debug("null snapping skipped at x=%s: %s", list(x), exc)
    return found


def conformal_field_report(
    L: Lagrangian,
    xi: VectorFieldSpec,
    base_points: Sequence[Sequence[float]],
    samples_per_point: int,
    seed: int = 0,
    tolerances: Mapping[str, float] | None = None,
) -> ConformalVerdict:
    """Estimate μ̂(x) from 𝓛L/L, its y-anisotropy, and the on-cone vanishing of 𝓛L."""

    tol = resolve(tolerances)
    factors: List[float] = []
    residuals: List[float] = []
    estimates: Dict[Tuple[float, ...], List[float]] = {}
    on_cone = 0.0
    skipped = 0
    for index, x in enumerate(base_points):
        samples = sample_admissible(L, x, samples_per_point, seed + index)
        usable: List[Tuple[np.ndarray, float, float]] = []
        for y in samples:
            value = L.value(x, y)
            if abs(value) <= tol["mu_floor"] * direction_scale(y):
                skipped += 1
                continue
            usable.append((y, value, lie_derivative_L(L, xi, x, y)))
        if not usable:
            raise AllSamplesNull(f"no non-null samples at x={list(x)}")
        ratios = [lie / value for _, value, lie in usable]
        mu = float(np.mean(ratios))
        factors.append(mu)
        estimates[_key(x)] = ratios
        residuals.extend(abs(lie - mu * value) / max(1.0, abs(value)) for _, value, lie in usable)
        for y in _null_samples(L, x, samples, tol["null"]):
            if abs(L.value(x, y)) <= tol["null_cone"] * direction_scale(y):
                on_cone = max(on_cone, abs(lie_derivative_L(L, xi, x, y)) / direction_scale(y))
    anisotropy, offenders = _spread(estimates, tol["anisotropy"])
    if anisotropy > tol["anisotropy"] or on_cone > tol["on_cone"]:
        verdict = "not-conformal"
    elif max(abs(mu) for mu in factors) <= tol["killing"]:
        verdict = "killing"
    else:
        verdict = "conformal"
    return ConformalVerdict(
        max_residual=float(max(residuals)),
        factors=tuple(factors),
        anisotropy=anisotropy,
        verdict=verdict,
        tolerances={key: tol[key] for key in ("anisotropy", "on_cone", "killing", "mu_floor")},
        skipped=skipped,
        on_cone_max=on_cone,
        anisotropic_points=tuple(offenders),
    )


# ---------------------------------------------------------------------------
# Spray relations


def _sigma_gradient(sigma: Expr, x: Sequence[float]) -> np.ndarray:
    n = sigma.n
    field = ScalarField(n, lambda xs, ys: sigma.evaluate_xy(xs), str(sigma))
    return jet_eval(field, x, np.ones(n), OrderMask(1, 0)).require("dx")


def spray_defect(
    L: Lagrangian, Ltilde: Lagrangian, x: Sequence[float], y: Sequence[float], tol_null: float | None = None
) -> SprayDefect:
    """D = G̃2 − G2 split as P̂·y + D⊥ with D⊥ g-orthogonal to y.

    On null y the split falls back to the Euclidean projection onto y.
    """

    tol = resolve()["null"] if tol_null is None else tol_null
    yv = np.asarray(y, dtype=float)
    D = spray(Ltilde, x, yv).G2 - spray(L, x, yv).G2
    value = L.value(x, yv)
    null = abs(value) <= tol * direction_scale(yv)
    if null:
        parallel = float(D @ yv) / direction_scale(yv)
    else:
        parallel = float(D @ (metric_tensor(L, x, yv).g @ yv)) / value
    transverse = D - parallel * yv
    return SprayDefect(
        D=D,
        parallel=parallel,
        transverse=transverse,
        transverse_norm=float(np.linalg.norm(transverse)),
        null=null,
    )


def spray_relation_residual(L: Lagrangian, sigma: Expr, x: Sequence[float], y: Sequence[float]) -> float:
    """Relative gap between G̃2 of e^σ L and G2 + (σ_{,k} y^k) y − ½ g^{-1}∇σ L."""

    yv = np.asarray(y, dtype=float)
    deformed = spray(conformal_deform(L, sigma), x, yv).G2
    metric = metric_tensor(L, x, yv)
    grad = _sigma_gradient(sigma, x)
    closed = spray(L, x, yv).G2 + (grad @ yv) * yv - 0.5 * (metric.g_inv @ grad) * L.value(x, yv)
    return float(np.max(np.abs(deformed - closed))) / max(1.0, float(np.max(np.abs(closed))))


def weyl_probe(
    L: Lagrangian,
    sigma: Expr,
    points: Sequence[Point],
    tolerances: Mapping[str, float] | None = None,
) -> WeylReport:
    """Constant σ: the spray must not change. Non-constant σ: find a transverse witness."""

    if L.n < 2:
        raise ValueError("the Weyl probe needs n ≥ 2")
    tol = resolve(tolerances)
    deformed = conformal_deform(L, sigma)
    constant = is_constant(sigma)
    max_transverse = 0.0
    max_defect = 0.0
    checked = 0
    for x, y in points:
        defect = spray_defect(L, deformed, x, y, tol["null"])
        checked += 1
        max_transverse = max(max_transverse, defect.transverse_norm)
        max_defect = max(max_defect, float(np.linalg.norm(defect.D)))
        if not constant and defect.transverse_norm >= tol["witness"] * direction_scale(y):
            logger.debug("weyl witness at x=%s y=%s (%.3e)", list(x), list(y), defect.transverse_norm)
            return WeylReport(
                constant_sigma=False,
                max_transverse=max_transverse,
                max_defect=max_defect,
                witness=Witness(x=_key(x), y=_key(y), value=defect.transverse_norm),
                passed=True,
                samples=checked,
            )
    if not constant:
        raise InconclusiveSampling(f"no transverse witness for σ={sigma} in {checked} samples")
    return WeylReport(
        constant_sigma=True,
        max_transverse=max_transverse,
        max_defect=max_defect,
        witness=None,
        passed=max_transverse <= tol["weyl"] and max_defect <= tol["weyl"],
        samples=checked,
    )


# ---------------------------------------------------------------------------
# Conservation along null geodesics


def null_invariant_series(L: Lagrangian, xi: VectorFieldSpec, traj: Trajectory) -> np.ndarray:
    """q(t_k) = g_{(x_k, y_k)}(y_k, ξ(x_k)) = ½ L_{·i} ξ^i."""

    values = []
    for k in range(len(traj)):
        jet = jet_eval(L.field, traj.x[k], traj.y[k], OrderMask(0, 1))
        values.append(0.5 * float(jet.require("dy") @ xi.at(traj.x[k])))
    return np.array(values)


def conservation_along_null(
    L: Lagrangian, xi: VectorFieldSpec, traj: Trajectory, tol_null: float | None = None
) -> float:
    """max_k |q(t_k) − q(t_0)| for a null geodesic and a conformal field."""

    tol = resolve()["null_cone"] if tol_null is None else tol_null
    if abs(traj.L0) > tol:
        raise NotNull(f"trajectory energy {traj.L0:.3e} exceeds {tol:g}")
    series = null_invariant_series(L, xi, traj)
    return float(np.max(np.abs(series - series[0]))) if series.size else 0.0


# ---------------------------------------------------------------------------
# Associated metrics


@dataclass(frozen=True)
class AssociatedMetric:
    """x ↦ g(x, ξ(x))."""

    base: Lagrangian
    xi: VectorFieldSpec

    def evaluate(self, x: Sequence[float]) -> MetricValue:
        direction = self.xi.at(x)
        if not self.base.is_admissible(x, direction):
            raise NotAdmissible(f"ξ({list(x)}) = {direction.tolist()} leaves the admissible set")
        return metric_tensor(self.base, x, direction)


def associated_metric(L: Lagrangian, xi: VectorFieldSpec) -> AssociatedMetric:
    return AssociatedMetric(base=L, xi=xi)


def associated_conformal_check(L: Lagrangian, sigma: Expr, xi: VectorFieldSpec, x: Sequence[float]) -> float:
    """Relative gap between the associated metric of e^σ L and e^σ times that of L."""

    deformed = associated_metric(conformal_deform(L, sigma), xi).evaluate(x).g
    scaled = np.exp(_sigma_at(sigma, x)) * associated_metric(L, xi).evaluate(x).g
    return float(np.max(np.abs(deformed - scaled))) / max(1.0, float(np.max(np.abs(scaled))))


def associated_lemma_probe(
    L: Lagrangian,
    xi: VectorFieldSpec,
    eps_values: Sequence[float],
    x_points: Sequence[Sequence[float]],
    samples_per_point: int = 8,
    seed: int = 0,
    tolerances: Mapping[str, float] | None = None,
) -> LemmaReport:
    """Fit φ_ε^*(g^ξ) = c·g^ξ and compare c with the Finslerian factor e^{σ_ε}."""

    tol = resolve(tolerances)
    g_xi = associated_metric(L, xi)
    entries: List[LemmaEntry] = []
    for eps in eps_values:
        phi = flow_map(xi, eps)
        worst_gap = 0.0
        worst_prop = 0.0
        fitted: List[float] = []
        finsler: List[float] = []
        signatures_ok = True
        for index, x in enumerate(x_points):
            D = phi.jacobian(x).matrix
            moved = np.array([float(primal(v)) for v in phi.apply([float(v) for v in x])])
            here = g_xi.evaluate(x)
            there = g_xi.evaluate(moved)
            if L.signature is not None:
                signatures_ok = signatures_ok and here.signature == L.signature and there.signature == L.signature
            P = D.T @ there.g @ D
            G = here.g
            c = float(np.sum(P * G) / np.sum(G * G))
            proportionality = float(np.linalg.norm(P - c * G) / max(1.0, np.linalg.norm(P)))
            ys = sample_admissible(L, x, samples_per_point, seed + index)
            sigma_hat = estimate_conformal_factor(L, L, phi, x, ys, tolerances).sigma
            factor = float(np.exp(sigma_hat))
            gap = abs(c - factor) / max(1.0, factor)
            fitted.append(c)
            finsler.append(factor)
            worst_gap = max(worst_gap, gap)
            worst_prop = max(worst_prop, proportionality)
        entries.append(
            LemmaEntry(
                eps=float(eps),
                fitted_factor=float(np.mean(fitted)) if fitted else 1.0,
                finsler_factor=float(np.mean(finsler)) if finsler else 1.0,
                factor_gap=worst_gap,
                proportionality=worst_prop,
                signatures_ok=signatures_ok,
            )
        )
    max_gap = max((max(entry.factor_gap, entry.proportionality) for entry in entries), default=0.0)
    passed = max_gap <= tol["lemma"] and all(entry.signatures_ok for entry in entries)
    return LemmaReport(entries=tuple(entries), max_gap=max_gap, passed=passed)


# ---------------------------------------------------------------------------
# Causal profile of a conformal field


def essential_scan(
    L: Lagrangian,
    xi: VectorFieldSpec,
    grid: Sequence[Sequence[float]],
    samples_per_point: int = 6,
    seed: int = 0,
    tolerances: Mapping[str, float] | None = None,
) -> EssentialScan:
    """Classify α(x) = L(x, ξ(x)) on the grid; when nowhere null check ξ is Killing for L/α."""

    tol = resolve(tolerances)
    tags: List[str] = []
    null_points: List[Tuple[float, ...]] = []
    outside: List[Tuple[float, ...]] = []
    alphas: List[float] = []
    usable: List[Sequence[float]] = []
    for x in grid:
        direction = xi.at(x)
        if not L.is_admissible(x, direction):
            tags.append("not-admissible")
            outside.append(_key(x))
            continue
        alpha = float(primal(field_norm(L, xi, [float(v) for v in x])))
        alphas.append(alpha)
        if abs(alpha) <= tol["null"] * direction_scale(direction):
            tags.append("null")
            null_points.append(_key(x))
            continue
        tags.append("timelike" if alpha > 0 else "spacelike")
        usable.append(x)
    essential_candidate = bool(null_points)
    verdict: Optional[ConformalVerdict] = None
    if not essential_candidate and usable:
        rescaled = rescale_by_field(L, xi, reference_x=usable[0])
        verdict = conformal_field_report(rescaled, xi, usable, samples_per_point, seed, tolerances)
    else:
        logger.debug("essential scan: %d null points, rescaling skipped", len(null_points))
    return EssentialScan(
        tags=tuple(tags),
        null_points=tuple(null_points),
        not_admissible=tuple(outside),
        alpha_min=min(alphas) if alphas else 0.0,
        alpha_max=max(alphas) if alphas else 0.0,
        essential_candidate=essential_candidate,
        rescaled_verdict=verdict,
    )


__all__ = [
    "PointMap",
    "VectorFieldSpec",
    "flow",
    "FlowMap",
    "flow_map",
    "classify_map",
    "conformal_residual",
    "estimate_conformal_factor",
    "lie_derivative_L",
    "lie_derivative_fd",
    "conformal_field_report",
    "spray_defect",
    "spray_relation_residual",
    "weyl_probe",
    "null_invariant_series",
    "conservation_along_null",
    "AssociatedMetric",
    "associated_metric",
    "associated_conformal_check",
    "associated_lemma_probe",
    "essential_scan",
]
