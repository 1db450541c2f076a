"""Nested forward-mode dual numbers and jets of scalar fields on the tangent bundle.

A :class:`Dual` carries a primal part ``p`` and a tangent part ``t``. Both parts
are generic: floats, numpy arrays or further duals. Nesting ``d`` levels gives
exact derivatives up to order ``d``; seeding each level with indicator arrays
(one array axis per level) fills a whole derivative block in one evaluation.

The module-level functions (:func:`exp`, :func:`log`, :func:`power`, ...) accept
plain floats and duals alike and use the same numpy routine on the primal chain,
so evaluating through duals reproduces plain evaluation bit for bit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Protocol, Sequence, Tuple

import numpy as np

from calc.tolerances import FD_STEP, TOLERANCE_DEFAULTS
from models.errors import DomainError, SingularJacobian
from models.geometry import FDReport, JacobianValue, Jet, OrderMask

logger = logging.getLogger(__name__)

Scalar = Any


class Dual:
    """Dual number ``p + t·ε`` with ``ε² = 0``."""

    __slots__ = ("p", "t")
    # Let Dual reflected operators win over ndarray broadcasting.
    __array_ufunc__ = None

    def __init__(self, p: Scalar, t: Scalar) -> None:
        self.p = p
        self.t = t

    def __repr__(self) -> str:
        return f"Dual({self.p!r}, {self.t!r})"

    def __add__(self, other: Scalar) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.p + other.p, self.t + other.t)
        return Dual(self.p + other, self.t)

    def __radd__(self, other: Scalar) -> "Dual":
        return Dual(other + self.p, self.t)

    def __sub__(self, other: Scalar) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.p - other.p, self.t - other.t)
        return Dual(self.p - other, self.t)

    def __rsub__(self, other: Scalar) -> "Dual":
        return Dual(other - self.p, -self.t)

    def __mul__(self, other: Scalar) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.p * other.p, self.p * other.t + self.t * other.p)
        return Dual(self.p * other, self.t * other)

    def __rmul__(self, other: Scalar) -> "Dual":
        return Dual(other * self.p, other * self.t)

    def __truediv__(self, other: Scalar) -> Scalar:
        return div(self, other)

    def __rtruediv__(self, other: Scalar) -> Scalar:
        return div(other, self)

    def __pow__(self, other: Scalar) -> Scalar:
        return power(self, other)

    def __rpow__(self, other: Scalar) -> Scalar:
        return power(other, self)

    def __neg__(self) -> "Dual":
        return Dual(-self.p, -self.t)

    def __pos__(self) -> "Dual":
        return self

    def __abs__(self) -> Scalar:
        return absolute(self)

    def __lt__(self, other: Scalar) -> bool:
        return primal(self) < primal(other)

    def __le__(self, other: Scalar) -> bool:
        return primal(self) <= primal(other)

    def __gt__(self, other: Scalar) -> bool:
        return primal(self) > primal(other)

    def __ge__(self, other: Scalar) -> bool:
        return primal(self) >= primal(other)


def primal(value: Scalar) -> Any:
    """Innermost primal value of a (possibly nested) dual."""

    while isinstance(value, Dual):
        value = value.p
    return value


def _is_integral(exponent: Any) -> bool:
    return float(exponent).is_integer()


def exp(value: Scalar) -> Scalar:
    if isinstance(value, Dual):
        e = exp(value.p)
        return Dual(e, e * value.t)
    return np.exp(value)


def log(value: Scalar) -> Scalar:
    base = primal(value)
    if base <= 0:
        raise DomainError(f"ln of non-positive value {float(base)!r}")
    if isinstance(value, Dual):
        return Dual(log(value.p), div(value.t, value.p))
    return np.log(value)


def sin(value: Scalar) -> Scalar:
    if isinstance(value, Dual):
        return Dual(sin(value.p), cos(value.p) * value.t)
    return np.sin(value)


def cos(value: Scalar) -> Scalar:
    if isinstance(value, Dual):
        return Dual(cos(value.p), -sin(value.p) * value.t)
    return np.cos(value)


def tanh(value: Scalar) -> Scalar:
    if isinstance(value, Dual):
        th = tanh(value.p)
        return Dual(th, (1.0 - th * th) * value.t)
    return np.tanh(value)


def sqrt(value: Scalar) -> Scalar:
    base = primal(value)
    if isinstance(value, Dual):
        if base <= 0:
            raise DomainError(f"sqrt is not differentiable at {float(base)!r}")
        s = sqrt(value.p)
        return Dual(s, div(value.t, 2.0 * s))
    if base < 0:
        raise DomainError(f"sqrt of negative value {float(base)!r}")
    return np.sqrt(value)


def absolute(value: Scalar) -> Scalar:
    if isinstance(value, Dual):
        base = primal(value)
        if base == 0:
            raise DomainError("abs is not differentiable at 0")
        return Dual(absolute(value.p), float(np.sign(base)) * value.t)
    return np.abs(value)


def sign(value: Scalar) -> Scalar:
    if isinstance(value, Dual):
        base = primal(value)
        if base == 0:
            raise DomainError("sign is not differentiable at 0")
        # Locally constant away from 0.
        return float(np.sign(base))
    return np.sign(value)


def div(numerator: Scalar, denominator: Scalar) -> Scalar:
    if isinstance(denominator, Dual):
        if primal(denominator) == 0:
            raise DomainError("division by zero")
        if isinstance(numerator, Dual):
            quotient = div(numerator.p, denominator.p)
            return Dual(quotient, div(numerator.t - quotient * denominator.t, denominator.p))
        quotient = div(numerator, denominator.p)
        return Dual(quotient, div(-(quotient * denominator.t), denominator.p))
    if np.ndim(denominator) == 0 and denominator == 0:
        raise DomainError("division by zero")
    if isinstance(numerator, Dual):
        return Dual(div(numerator.p, denominator), div(numerator.t, denominator))
    return numerator / denominator


def power(base: Scalar, exponent: Scalar) -> Scalar:
    """``base ** exponent`` with the domain rules of the expression language.

    A non-integer or varying exponent needs a positive base; ``0`` may not be raised
    to a negative power.
    """

    b = primal(base)
    e = primal(exponent)
    varying_exponent = isinstance(exponent, Dual)
    if varying_exponent or not _is_integral(e):
        if b <= 0:
            raise DomainError(f"power with base {float(b)!r} needs an integer exponent")
    elif b == 0 and e < 0:
        raise DomainError("0 raised to a negative power")
    if not isinstance(base, Dual) and not varying_exponent:
        return np.power(base, exponent)
    if not varying_exponent and e == 0:
        return np.power(b, 0.0)
    bp = base.p if isinstance(base, Dual) else base
    ep = exponent.p if varying_exponent else exponent
    value = power(bp, ep)
    tangent: Scalar = 0.0
    if isinstance(base, Dual):
        tangent = ep * power(bp, ep - 1.0) * base.t
    if varying_exponent:
        tangent = tangent + value * log(bp) * exponent.t
    return Dual(value, tangent)


# ---------------------------------------------------------------------------
# Seeding and extraction


def _embed(seed: Any, levels: int) -> Scalar:
    """Embed ``seed`` as a constant ``levels`` dual levels deep."""

    for _ in range(levels):
        seed = Dual(seed, 0.0)
    return seed


def make_variable(value: float, seeds: Sequence[Any]) -> Scalar:
    """Variable with one tangent seed per nesting level (innermost first)."""

    if not seeds:
        return value
    inner = make_variable(value, seeds[:-1])
    return Dual(inner, _embed(seeds[-1], len(seeds) - 1))


def _component(result: Scalar, depth: int, levels: Sequence[int]) -> Any:
    node = result
    for level in range(depth, 0, -1):
        if not isinstance(node, Dual):
            return 0.0 if any(item <= level for item in levels) else node
        node = node.t if level in levels else node.p
    return node


def _extract(result: Scalar, shape: Tuple[int, ...], levels: Sequence[int]) -> np.ndarray:
    component = _component(result, len(shape), levels)
    full = np.broadcast_to(np.asarray(component, dtype=float), shape)
    index = tuple(slice(None) if axis + 1 in levels else 0 for axis in range(len(shape)))
    return np.array(full[index], dtype=float)


@dataclass(frozen=True)
class ScalarField:
    """Deterministic field ``F(x, y)`` whose evaluator is generic over the scalar type."""

    n: int
    evaluator: Callable[[Sequence[Scalar], Sequence[Scalar]], Scalar]
    label: str = ""

    def __call__(self, x: Sequence[Scalar], y: Sequence[Scalar]) -> Scalar:
        return self.evaluator(x, y)


class FieldLike(Protocol):
    n: int

    def __call__(self, x: Sequence[Scalar], y: Sequence[Scalar]) -> Scalar: ...


def _indicator(size: int, index: int, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = size
    seed = np.zeros(shape)
    seed.reshape(-1)[index] = 1.0
    return seed


def jet_eval(F: FieldLike, x: Sequence[float], y: Sequence[float], order_mask: OrderMask | None = None) -> Jet:
    """Evaluate ``F`` and the derivative blocks allowed by ``order_mask`` at (x, y).

    The first nesting level is seeded over z = (x, y); further levels over y only.
    """

    mask = order_mask or OrderMask()
    n = int(F.n)
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    depth = mask.depth
    if depth == 0:
        value = F(list(xv), list(yv))
        return Jet(n=n, value=float(primal(value)), order_mask=mask)

    shape = (2 * n,) + (n,) * (depth - 1)
    xs: List[Scalar] = []
    ys: List[Scalar] = []
    for i in range(n):
        seeds_x = [_indicator(2 * n, i, 0, depth)] + [0.0] * (depth - 1)
        seeds_y = [_indicator(2 * n, n + i, 0, depth)] + [
            _indicator(n, i, level, depth) for level in range(1, depth)
        ]
        xs.append(make_variable(float(xv[i]), seeds_x))
        ys.append(make_variable(float(yv[i]), seeds_y))
    result = F(xs, ys)

    blocks: Dict[str, np.ndarray] = {}
    dz = _extract(result, shape, [1])
    allowed = mask.blocks()
    if "dx" in allowed:
        blocks["dx"] = dz[:n]
    if "dy" in allowed:
        blocks["dy"] = dz[n:]
    if depth >= 2:
        dzdy = _extract(result, shape, [1, 2])
        if "dydy" in allowed:
            blocks["dydy"] = dzdy[n:]
        if "dxdy" in allowed:
            blocks["dxdy"] = dzdy[:n].T.copy()
    if depth >= 3:
        dzdydy = _extract(result, shape, [1, 2, 3])
        if "dydydy" in allowed:
            blocks["dydydy"] = dzdydy[n:]
        if "dxdydy" in allowed:
            blocks["dxdydy"] = dzdydy[:n]

    jet = Jet(n=n, value=float(primal(result)), order_mask=mask, **blocks)
    if logger.isEnabledFor(logging.DEBUG):
        defect = jet.symmetry_defect()
        if defect > TOLERANCE_DEFAULTS["symmetry"]:
            logger.debug("jet asymmetry %.3e at x=%s y=%s (%s)", defect, xv, yv, getattr(F, "label", ""))
    return jet


# ---------------------------------------------------------------------------
# Finite-difference oracle


def _richardson(func: Callable[[np.ndarray], np.ndarray], z: np.ndarray, index: int) -> np.ndarray:
    h = FD_STEP * max(1.0, abs(float(z[index])))

    def central(step: float) -> np.ndarray:
        plus = z.copy()
        minus = z.copy()
        plus[index] += step
        minus[index] -= step
        return (np.asarray(func(plus)) - np.asarray(func(minus))) / (2.0 * step)

    coarse = central(h)
    fine = central(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def _fd_gradient(func: Callable[[np.ndarray], np.ndarray], z: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    """Stack of derivatives along ``indices``, last axis indexes the direction."""

    return np.stack([_richardson(func, z, index) for index in indices], axis=-1)


def _relative(ad: np.ndarray, fd: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(ad))) if ad.size else 0.0)
    return float(np.max(np.abs(ad - fd))) / scale if ad.size else 0.0


def fd_check(F: FieldLike, x: Sequence[float], y: Sequence[float], order_mask: OrderMask | None = None) -> FDReport:
    """Compare each filled jet block with central differences (Richardson once).

    First-order blocks are differenced from plain values of ``F``; each higher
    block is differenced from the jet block one order below it.
    """

    mask = order_mask or OrderMask()
    n = int(F.n)
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    jet = jet_eval(F, xv, yv, mask)
    z0 = np.concatenate([xv, yv])
    x_idx = list(range(n))
    y_idx = list(range(n, 2 * n))

    def at(z: np.ndarray, sub_mask: OrderMask) -> Jet:
        return jet_eval(F, z[:n], z[n:], sub_mask)

    report: Dict[str, float] = {}
    filled = jet.filled
    if {"dx", "dy"} & filled:
        value_fn = lambda z: np.asarray(at(z, OrderMask(0, 0)).value)  # noqa: E731
        grad = _fd_gradient(value_fn, z0, x_idx + y_idx)
        if "dx" in filled:
            report["dx"] = _relative(jet.require("dx"), grad[:n])
        if "dy" in filled:
            report["dy"] = _relative(jet.require("dy"), grad[n:])
    if {"dydy", "dxdy"} & filled:
        dy_fn = lambda z: at(z, OrderMask(0, 1)).require("dy")  # noqa: E731
        if "dydy" in filled:
            report["dydy"] = _relative(jet.require("dydy"), _fd_gradient(dy_fn, z0, y_idx))
        if "dxdy" in filled:
            report["dxdy"] = _relative(jet.require("dxdy"), _fd_gradient(dy_fn, z0, x_idx))
    if {"dydydy", "dxdydy"} & filled:
        dydy_fn = lambda z: at(z, OrderMask(0, 2)).require("dydy")  # noqa: E731
        if "dydydy" in filled:
            report["dydydy"] = _relative(jet.require("dydydy"), _fd_gradient(dydy_fn, z0, y_idx))
        if "dxdydy" in filled:
            fd = np.moveaxis(_fd_gradient(dydy_fn, z0, x_idx), -1, 0)
            report["dxdydy"] = _relative(jet.require("dxdydy"), fd)
    worst = max(report.values()) if report else 0.0
    return FDReport(max_relative=worst, blocks=report)


# ---------------------------------------------------------------------------
# Jacobians of point maps


class MapLike(Protocol):
    n: int

    def apply(self, x: Sequence[Scalar]) -> List[Scalar]: ...


def jacobian_matrix(func: Callable[[Sequence[Scalar]], Sequence[Scalar]], x: Sequence[Scalar], n: int) -> Tuple[List[Scalar], List[List[Scalar]]]:
    """Values and Jacobian of ``func`` at ``x``; ``x`` may itself hold duals.

    Each direction is one evaluation with a float seed wrapped around ``x``.
    """

    values: List[Scalar] = []
    columns: List[List[Scalar]] = []
    for j in range(n):
        seeded = [Dual(x[i], 1.0 if i == j else 0.0) for i in range(n)]
        out = func(seeded)
        if j == 0:
            values = [item.p if isinstance(item, Dual) else item for item in out]
        columns.append([item.t if isinstance(item, Dual) else 0.0 for item in out])
    matrix = [[columns[j][i] for j in range(n)] for i in range(n)]
    return values, matrix


def jacobian(f: MapLike, x: Sequence[float], *, tol: float | None = None) -> JacobianValue:
    """Df(x) through forward-mode duals and its determinant via LU."""

    n = int(f.n)
    xv = [float(value) for value in x]
    _, rows = jacobian_matrix(f.apply, xv, n)
    matrix = np.array([[float(primal(entry)) for entry in row] for row in rows], dtype=float)
    det = float(np.linalg.det(matrix))
    cutoff = TOLERANCE_DEFAULTS["singular_jacobian"] if tol is None else tol
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    if scale == 0.0 or abs(det) <= cutoff * scale**n:
        raise SingularJacobian(f"singular Jacobian at x={xv} (det={det:.3e})", determinant=det)
    return JacobianValue(matrix=matrix, det=det)


__all__ = [
    "Dual",
    "Scalar",
    "ScalarField",
    "FieldLike",
    "MapLike",
    "primal",
    "exp",
    "log",
    "sin",
    "cos",
    "tanh",
    "sqrt",
    "absolute",
    "sign",
    "div",
    "power",
    "make_variable",
    "jet_eval",
    "fd_check",
    "jacobian_matrix",
    "jacobian",
]
