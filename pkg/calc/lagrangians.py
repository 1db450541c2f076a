"""Pseudo-Finsler structures (M, A, L): built-in families and composition operators."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from calc import autodiff as ad
from calc.autodiff import ScalarField, jacobian_matrix, jet_eval, primal
from calc.tolerances import PRODUCT_FACTOR_MARGIN, SAMPLING_REJECTION_FACTOR, TOLERANCE_DEFAULTS
from core.expressions import Expr, free_vars, parse, y_variables
from models.errors import DomainError, GeometryError, SamplingExhausted, SingularJacobian, YDependentSigma
from models.geometry import OrderMask

logger = logging.getLogger(__name__)

Proposal = Callable[[np.ndarray, np.random.Generator], np.ndarray]
Predicate = Callable[[np.ndarray, np.ndarray], bool]

SIGN_CHAMBER_NOTE = "weighted product: L = sign(L1)·sign(L2)·|L1|^α·|L2|^(1−α), samples drawn where L1>0 and L2>0"
BM_CHAMBER_NOTE = "Berwald–Moor: declared signature is that of the ε=+1 chamber"


def _unit_sphere(n: int) -> Proposal:
    def propose(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        y = rng.standard_normal(n)
        return y / np.linalg.norm(y)

    return propose


@dataclass(frozen=True)
class SamplerHint:
    """Proposal distribution for admissible directions plus an optional chamber filter."""

    name: str
    proposal: Proposal
    accept: Optional[Predicate] = None


@dataclass(frozen=True)
class Lagrangian:
    """A 2-homogeneous field L(x, y) with admissible set A and declared signature.

    ``signature`` is ``(q, n - q)``: negative then positive eigenvalue counts of g.
    It is ``None`` when no reference point could fix it.
    """

    n: int
    field: ScalarField
    admissible: Predicate
    signature: Optional[Tuple[int, int]]
    label: str
    sampler_hint: SamplerHint
    family: str = "custom"
    notes: Tuple[str, ...] = ()

    def __call__(self, x: Sequence[Any], y: Sequence[Any]) -> Any:
        return self.field(x, y)

    def value(self, x: Sequence[float], y: Sequence[float]) -> float:
        return float(primal(self.field([float(v) for v in x], [float(v) for v in y])))

    def is_admissible(self, x: Sequence[float], y: Sequence[float]) -> bool:
        xv = np.asarray(x, dtype=float)
        yv = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(yv)) or not np.any(yv):
            return False
        try:
            return bool(self.admissible(xv, yv))
        except GeometryError:
            return False


# ---------------------------------------------------------------------------
# Point maps given by expressions


@dataclass(frozen=True)
class DiffeoSpec:
    """Map f: M → M given componentwise by expressions in the x variables."""

    n: int
    components: Tuple[Expr, ...]
    kind: str = "general"
    inverse: Optional[Tuple[Expr, ...]] = None
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.components) != self.n:
            raise ValueError(f"expected {self.n} components, got {len(self.components)}")
        if self.kind not in ("componentwise", "general"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        for index, component in enumerate(self.components):
            names = free_vars(component)
            if any(name.startswith("y") for name in names):
                raise ValueError(f"component {index} depends on a direction variable")
            if self.kind == "componentwise" and not names <= {f"x{index}"}:
                raise ValueError(f"component {index} of a componentwise map may only use x{index}")
        if self.inverse is not None and len(self.inverse) != self.n:
            raise ValueError("inverse must have one component per dimension")

    @classmethod
    def from_sources(
        cls,
        sources: Sequence[str],
        *,
        kind: str = "general",
        inverse: Sequence[str] | None = None,
        label: str = "",
    ) -> "DiffeoSpec":
        n = len(sources)
        components = tuple(parse(src, n) for src in sources)
        inverse_exprs = tuple(parse(src, n) for src in inverse) if inverse else None
        return cls(n=n, components=components, kind=kind, inverse=inverse_exprs, label=label or ", ".join(sources))

    def apply(self, x: Sequence[Any]) -> List[Any]:
        return [component.evaluate_xy(x) for component in self.components]

    def apply_inverse(self, x: Sequence[Any]) -> List[Any]:
        if self.inverse is None:
            raise ValueError("map has no inverse components")
        return [component.evaluate_xy(x) for component in self.inverse]

    def jacobian(self, x: Sequence[float]):
        return ad.jacobian(self, x)


def identity_map(n: int) -> DiffeoSpec:
    return DiffeoSpec.from_sources([f"x{i}" for i in range(n)], kind="componentwise", label="identity")


def inversion_map(signs: Sequence[int]) -> DiffeoSpec:
    """Inversion x ↦ x/⟨x,x⟩ for the quadratic form with the given signs."""

    n = len(signs)
    norm = "+".join(f"{'-' if s < 0 else ''}x{i}^2" for i, s in enumerate(signs)).replace("+-", "-")
    sources = [f"x{i}/({norm})" for i in range(n)]
    return DiffeoSpec.from_sources(sources, kind="general", inverse=sources, label="inversion")


# ---------------------------------------------------------------------------
# Signature of a field from its y-Hessian


def hessian_signature(field: ScalarField, x: Sequence[float], y: Sequence[float]) -> Optional[Tuple[int, int]]:
    jet = jet_eval(field, x, y, OrderMask(0, 2))
    eig = np.linalg.eigvalsh(0.5 * jet.require("dydy"))
    cutoff = TOLERANCE_DEFAULTS["eigen_cutoff"] * float(np.max(np.abs(eig)))
    if cutoff == 0.0 or np.any(np.abs(eig) <= cutoff):
        return None
    return int(np.sum(eig < 0)), int(np.sum(eig > 0))


def _infer_signature(
    field: ScalarField,
    admissible: Predicate,
    hint: SamplerHint,
    reference_x: Sequence[float] | None = None,
    attempts: int = 64,
) -> Optional[Tuple[int, int]]:
    rng = np.random.default_rng(0)
    n = field.n
    for _ in range(attempts):
        x = np.asarray(reference_x, dtype=float) if reference_x is not None else rng.uniform(0.5, 1.5, n)
        y = hint.proposal(x, rng)
        try:
            if not admissible(x, y) or (hint.accept is not None and not hint.accept(x, y)):
                continue
            signature = hessian_signature(field, x, y)
        except GeometryError:
            continue
        if signature is not None:
            return signature
    logger.debug("could not fix a reference signature for %s", field.label)
    return None


# ---------------------------------------------------------------------------
# Built-in families


def make_pseudo_euclidean(signs: Sequence[int]) -> Lagrangian:
    """L(y) = Σ signs_i (y^i)²."""

    coeffs = tuple(1.0 if int(s) > 0 else -1.0 for s in signs)
    n = len(coeffs)
    if n < 1:
        raise ValueError("dimension must be at least 1")

    def evaluate(x: Sequence[Any], y: Sequence[Any]) -> Any:
        total: Any = 0.0
        for c, component in zip(coeffs, y):
            total = total + c * (component * component)
        return total

    negatives = sum(1 for c in coeffs if c < 0)
    label = "pseudo-euclidean(" + ",".join("+" if c > 0 else "-" for c in coeffs) + ")"
    return Lagrangian(
        n=n,
        field=ScalarField(n, evaluate, label),
        admissible=lambda x, y: bool(np.any(y != 0.0)),
        signature=(negatives, n - negatives),
        label=label,
        sampler_hint=SamplerHint("sphere", _unit_sphere(n)),
        family="pseudo_euclidean",
    )


def make_minkowski(n: int) -> Lagrangian:
    return make_pseudo_euclidean([1] + [-1] * (n - 1))


def make_berwald_moor(n: int) -> Lagrangian:
    """L(y) = ε|y⁰···y^{n−1}|^{2/n}, ε = sign(y⁰···y^{n−1})."""

    if n < 2:
        raise ValueError("Berwald–Moor needs n ≥ 2")
    floor = TOLERANCE_DEFAULTS["domain_zero"]
    exponent = 2.0 / n

    def evaluate(x: Sequence[Any], y: Sequence[Any]) -> Any:
        for index, component in enumerate(y):
            if abs(float(primal(component))) <= floor:
                raise DomainError(f"Berwald–Moor undefined: |y{index}| ≤ {floor:g}")
        product: Any = y[0]
        for component in y[1:]:
            product = product * component
        if n == 2:
            return product
        return ad.sign(product) * ad.power(ad.absolute(product), exponent)

    def propose(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        magnitude = np.abs(rng.standard_normal(n)) + 0.05
        signs = rng.choice([-1.0, 1.0], size=n)
        if np.prod(signs) < 0:
            signs[int(rng.integers(n))] *= -1.0
        y = signs * magnitude
        return y / np.linalg.norm(y)

    label = f"berwald-moor(n={n})"
    return Lagrangian(
        n=n,
        field=ScalarField(n, evaluate, label),
        admissible=lambda x, y: bool(np.all(np.abs(y) > floor)),
        signature=(n - 1, 1),
        label=label,
        sampler_hint=SamplerHint("orthant", propose),
        family="berwald_moor",
        notes=(BM_CHAMBER_NOTE,) if n > 2 else (),
    )


def make_weighted_product(L1: Lagrangian, L2: Lagrangian, alpha: float) -> Lagrangian:
    """L = sign(L1)·sign(L2)·|L1|^α·|L2|^(1−α) on M1 × M2, A restricted to L1·L2 ≠ 0."""

    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    k = L1.n
    n = L1.n + L2.n
    weight2 = 1.0 - a

    def factors(x: Sequence[Any], y: Sequence[Any]) -> Tuple[Any, Any]:
        return L1.field(list(x[:k]), list(y[:k])), L2.field(list(x[k:]), list(y[k:]))

    def evaluate(x: Sequence[Any], y: Sequence[Any]) -> Any:
        l1, l2 = factors(x, y)
        if primal(l1) == 0 or primal(l2) == 0:
            raise DomainError("weighted product undefined where a factor vanishes")
        chamber = ad.sign(l1) * ad.sign(l2)
        return chamber * ad.power(ad.absolute(l1), a) * ad.power(ad.absolute(l2), weight2)

    def admissible(x: np.ndarray, y: np.ndarray) -> bool:
        if not (L1.is_admissible(x[:k], y[:k]) and L2.is_admissible(x[k:], y[k:])):
            return False
        return L1.value(x[:k], y[:k]) * L2.value(x[k:], y[k:]) != 0.0

    def propose(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        y1 = L1.sampler_hint.proposal(x[:k], rng)
        y2 = L2.sampler_hint.proposal(x[k:], rng)
        return np.concatenate([y1, y2]) / np.sqrt(2.0)

    def principal_chamber(x: np.ndarray, y: np.ndarray) -> bool:
        y1, y2 = y[:k], y[k:]
        return (
            L1.value(x[:k], y1) > PRODUCT_FACTOR_MARGIN * float(y1 @ y1)
            and L2.value(x[k:], y2) > PRODUCT_FACTOR_MARGIN * float(y2 @ y2)
        )

    label = f"weighted({L1.label}, {L2.label}, α={a:g})"
    field = ScalarField(n, evaluate, label)
    hint = SamplerHint("product", propose, principal_chamber)
    return Lagrangian(
        n=n,
        field=field,
        admissible=admissible,
        signature=_infer_signature(field, admissible, hint),
        label=label,
        sampler_hint=hint,
        family="weighted_product",
        notes=(SIGN_CHAMBER_NOTE,) + L1.notes + L2.notes,
    )


# ---------------------------------------------------------------------------
# Composition operators


def conformal_deform(L: Lagrangian, sigma: Expr) -> Lagrangian:
    """L̃(x, y) = e^{σ(x)} L(x, y) on the same admissible set."""

    offending = y_variables(sigma)
    if offending:
        raise YDependentSigma(offending)

    def evaluate(x: Sequence[Any], y: Sequence[Any]) -> Any:
        return ad.exp(sigma.evaluate_xy(x)) * L.field(x, y)

    def admissible(x: np.ndarray, y: np.ndarray) -> bool:
        if not L.admissible(x, y):
            return False
        # DomainError outside the domain of σ; Lagrangian.is_admissible maps it to False.
        return bool(np.isfinite(float(primal(sigma.evaluate_xy([float(v) for v in x])))))

    label = f"exp({sigma})·{L.label}"
    return Lagrangian(
        n=L.n,
        field=ScalarField(L.n, evaluate, label),
        admissible=admissible,
        signature=L.signature,
        label=label,
        sampler_hint=L.sampler_hint,
        family="conformal",
        notes=L.notes,
    )


def _checked_jacobian(f: Any, x: Sequence[Any]) -> Tuple[List[Any], List[List[Any]]]:
    values, matrix = jacobian_matrix(f.apply, x, f.n)
    numeric = np.array([[float(primal(entry)) for entry in row] for row in matrix], dtype=float)
    det = float(np.linalg.det(numeric))
    scale = float(np.max(np.abs(numeric))) if numeric.size else 0.0
    if scale == 0.0 or abs(det) <= TOLERANCE_DEFAULTS["singular_jacobian"] * scale**f.n:
        raise SingularJacobian(f"singular Jacobian of {getattr(f, 'label', 'map')} (det={det:.3e})", determinant=det)
    return values, matrix


def _push(matrix: List[List[Any]], y: Sequence[Any]) -> List[Any]:
    pushed: List[Any] = []
    for row in matrix:
        total: Any = 0.0
        for entry, component in zip(row, y):
            total = total + entry * component
        pushed.append(total)
    return pushed


def pullback(Lp: Lagrangian, f: Any) -> Lagrangian:
    """L̃(x, y) = Lp(f(x), Df(x)·y)."""

    n = Lp.n

    def evaluate(x: Sequence[Any], y: Sequence[Any]) -> Any:
        fx, matrix = _checked_jacobian(f, x)
        fy = _push(matrix, y)
        if not Lp.is_admissible([float(primal(v)) for v in fx], [float(primal(v)) for v in fy]):
            raise DomainError("pulled-back direction leaves the admissible set")
        return Lp.field(fx, fy)

    def numeric(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        fx, matrix = _checked_jacobian(f, [float(v) for v in x])
        return (
            np.array([float(primal(v)) for v in fx]),
            np.array([[float(primal(entry)) for entry in row] for row in matrix]),
        )

    def admissible(x: np.ndarray, y: np.ndarray) -> bool:
        try:
            fx, df = numeric(x)
        except SingularJacobian:
            return False
        return Lp.is_admissible(fx, df @ y)

    def propose(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        fx, df = numeric(x)
        y = np.linalg.solve(df, Lp.sampler_hint.proposal(fx, rng))
        return y / np.linalg.norm(y)

    accept: Optional[Predicate] = None
    if Lp.sampler_hint.accept is not None:
        inner = Lp.sampler_hint.accept

        def accept(x: np.ndarray, y: np.ndarray) -> bool:
            fx, df = numeric(x)
            return inner(fx, df @ y)

    label = f"pullback({Lp.label}, {getattr(f, 'label', 'map')})"
    return Lagrangian(
        n=n,
        field=ScalarField(n, evaluate, label),
        admissible=admissible,
        signature=Lp.signature,
        label=label,
        sampler_hint=SamplerHint("pullback", propose, accept),
        family="pullback",
        notes=Lp.notes,
    )


def field_norm(L: Lagrangian, xi: Any, x: Sequence[Any]) -> Any:
    """α(x) = L(x, ξ(x))."""

    return L.field(x, xi.apply(x))


def rescale_by_field(L: Lagrangian, xi: Any, reference_x: Sequence[float] | None = None) -> Lagrangian:
    """L̃ = L/α with α(x) = L(x, ξ(x)); defined where ξ is nowhere null."""

    tol_null = TOLERANCE_DEFAULTS["null"]

    def evaluate(x: Sequence[Any], y: Sequence[Any]) -> Any:
        return ad.div(L.field(x, y), field_norm(L, xi, x))

    def admissible(x: np.ndarray, y: np.ndarray) -> bool:
        if not L.is_admissible(x, y):
            return False
        direction = np.array([float(primal(v)) for v in xi.apply([float(v) for v in x])])
        if not L.is_admissible(x, direction):
            return False
        alpha = L.value(x, direction)
        return abs(alpha) > tol_null * float(direction @ direction)

    label = f"{L.label}/L(ξ)"
    field = ScalarField(L.n, evaluate, label)
    hint = L.sampler_hint
    return Lagrangian(
        n=L.n,
        field=field,
        admissible=admissible,
        signature=_infer_signature(field, admissible, hint, reference_x),
        label=label,
        sampler_hint=hint,
        family="rescaled",
        notes=L.notes,
    )


def pullback_metric(Lp: Lagrangian, f: Any, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """g̃_ij = ∂_i f^k ∂_j f^l g'_kl(f(x), Df(x)y)."""

    fx, matrix = _checked_jacobian(f, [float(v) for v in x])
    df = np.array([[float(primal(entry)) for entry in row] for row in matrix])
    point = np.array([float(primal(v)) for v in fx])
    jet = jet_eval(Lp.field, point, df @ np.asarray(y, dtype=float), OrderMask(0, 2))
    return df.T @ (0.5 * jet.require("dydy")) @ df


# ---------------------------------------------------------------------------
# Sampling


def sample_admissible(L: Lagrangian, x: Sequence[float], count: int, seed: int) -> List[np.ndarray]:
    """Draw ``count`` admissible unit-norm directions at ``x``; deterministic in ``seed``."""

    if count < 1:
        raise ValueError("count must be at least 1")
    xv = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    accept = L.sampler_hint.accept
    budget = SAMPLING_REJECTION_FACTOR * count
    samples: List[np.ndarray] = []
    rejected = 0
    while len(samples) < count:
        try:
            y = np.asarray(L.sampler_hint.proposal(xv, rng), dtype=float)
            ok = L.is_admissible(xv, y) and (accept is None or accept(xv, y))
        except GeometryError:
            ok = False
        if ok:
            samples.append(y)
            continue
        rejected += 1
        if rejected > budget:
            raise SamplingExhausted(f"{L.label}: {rejected} rejections at x={xv.tolist()}")
    if rejected:
        logger.debug("%s: %d rejected proposals at x=%s", L.label, rejected, xv.tolist())
    return samples


__all__ = [
    "SamplerHint",
    "Lagrangian",
    "DiffeoSpec",
    "identity_map",
    "inversion_map",
    "hessian_signature",
    "make_pseudo_euclidean",
    "make_minkowski",
    "make_berwald_moor",
    "make_weighted_product",
    "conformal_deform",
    "pullback",
    "field_norm",
    "rescale_by_field",
    "pullback_metric",
    "sample_admissible",
    "SIGN_CHAMBER_NOTE",
    "BM_CHAMBER_NOTE",
]
