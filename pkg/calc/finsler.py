"""Metric tensor, angular metric, spray, nonlinear connection and causal character."""
from __future__ import annotations

import dataclasses
import logging
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from calc.autodiff import jet_eval
from calc.lagrangians import Lagrangian
from calc.tolerances import TOLERANCE_DEFAULTS
from models.errors import DegenerateMetric, GridTooCoarse, NotAdmissible, NullDirection
from models.geometry import (
    AngularMetric,
    CausalCharacter,
    Jet,
    MetricValue,
    OrderMask,
    SprayValue,
    StructureProfile,
    Trajectory,
)

logger = logging.getLogger(__name__)


def direction_scale(y: Sequence[float]) -> float:
    """‖y‖², the natural scale of 2-homogeneous quantities."""

    yv = np.asarray(y, dtype=float)
    return float(yv @ yv)


def _require_admissible(L: Lagrangian, x: Sequence[float], y: Sequence[float]) -> None:
    if not L.is_admissible(x, y):
        raise NotAdmissible(f"{L.label}: ({list(np.round(x, 12))}, {list(np.round(y, 12))}) is outside A")


def metric_from_hessian(hessian: np.ndarray) -> MetricValue:
    g = 0.25 * (hessian + hessian.T)
    eigenvalues, vectors = np.linalg.eigh(g)
    largest = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    cutoff = TOLERANCE_DEFAULTS["eigen_cutoff"] * largest
    det = float(np.prod(eigenvalues))
    scale = float(np.max(np.abs(g))) if g.size else 0.0
    if largest == 0.0 or np.any(np.abs(eigenvalues) <= cutoff) or abs(det) <= TOLERANCE_DEFAULTS["degenerate"] * scale ** len(g):
        raise DegenerateMetric(f"degenerate metric, eigenvalues {eigenvalues.tolist()}")
    g_inv = (vectors / eigenvalues) @ vectors.T
    negatives = int(np.sum(eigenvalues < 0))
    return MetricValue(
        g=g,
        g_inv=g_inv,
        signature=(negatives, len(g) - negatives),
        det=det,
        eigenvalues=eigenvalues,
    )


def _metric_from_jet(L: Lagrangian, jet: Jet) -> MetricValue:
    metric = metric_from_hessian(jet.require("dydy"))
    if L.signature is not None and metric.signature != L.signature:
        note = f"{L.label}: signature {metric.signature} differs from declared {L.signature}"
        logger.warning("%s", note)
        return dataclasses.replace(metric, notes=metric.notes + (note,))
    return metric


def metric_tensor(L: Lagrangian, x: Sequence[float], y: Sequence[float]) -> MetricValue:
    """g_ij = ½ ∂²L/∂y^i∂y^j with inverse and signature from ``eigh``."""

    _require_admissible(L, x, y)
    return _metric_from_jet(L, jet_eval(L.field, x, y, OrderMask(0, 2)))


def lower_index(L: Lagrangian, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    return metric_tensor(L, x, y).g @ np.asarray(y, dtype=float)


def finsler_norm(L: Lagrangian, x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.sqrt(abs(L.value(x, y))))


def angular_metric(
    L: Lagrangian, x: Sequence[float], y: Sequence[float], tol_null: Optional[float] = None
) -> AngularMetric:
    """h_ij = g_ij − y_i y_j / L, defined off the null cone."""

    tol = TOLERANCE_DEFAULTS["null"] if tol_null is None else tol_null
    _require_admissible(L, x, y)
    jet = jet_eval(L.field, x, y, OrderMask(0, 2))
    if abs(jet.value) <= tol * direction_scale(y):
        raise NullDirection(f"{L.label}: L={jet.value:.3e} is null at y={list(y)}")
    metric = _metric_from_jet(L, jet)
    y_lower = metric.g @ np.asarray(y, dtype=float)
    h = metric.g - np.outer(y_lower, y_lower) / jet.value
    h_upper = metric.g_inv @ h @ metric.g_inv
    return AngularMetric(h=h, h_upper=h_upper, y_lower=y_lower)


def _connection(jet: Jet, metric: MetricValue, y: np.ndarray, transport: np.ndarray) -> np.ndarray:
    dxdy = jet.require("dxdy")
    dxdydy = jet.require("dxdydy")
    dydydy = jet.require("dydydy")
    g_inv = metric.g_inv
    # ∂_j T_h with T_h = L_{·h,k} y^k − L_{,h}
    d_transport = np.einsum("khj,k->hj", dxdydy, y) + dxdy - dxdy.T
    # ∂_j g^{ih} = −g^{ia} (½ ∂_j L_{·a·b}) g^{bh}
    d_g_inv = -0.5 * np.einsum("ia,abj,bh->ihj", g_inv, dydydy, g_inv)
    return 0.25 * (np.einsum("ihj,h->ij", d_g_inv, transport) + g_inv @ d_transport)


def spray(L: Lagrangian, x: Sequence[float], y: Sequence[float], *, connection: bool = False) -> SprayValue:
    """2G^i = ½ g^{ih}(L_{·h,j} y^j − L_{,h}); with ``connection`` also G^i_j = ∂G^i/∂y^j."""

    _require_admissible(L, x, y)
    yv = np.asarray(y, dtype=float)
    jet = jet_eval(L.field, x, yv, OrderMask(1, 3 if connection else 2))
    metric = _metric_from_jet(L, jet)
    transport = jet.require("dxdy") @ yv - jet.require("dx")
    G2 = 0.5 * metric.g_inv @ transport
    Gcoeff = _connection(jet, metric, yv, transport) if connection else None
    return SprayValue(G2=G2, Gcoeff=Gcoeff)


def causal_character(
    L: Lagrangian, x: Sequence[float], y: Sequence[float], tol_null: Optional[float] = None
) -> CausalCharacter:
    tol = TOLERANCE_DEFAULTS["null"] if tol_null is None else tol_null
    _require_admissible(L, x, y)
    value = L.value(x, y)
    threshold = tol * direction_scale(y)
    if abs(value) <= threshold:
        tag = "null"
    elif value > 0:
        tag = "timelike"
    else:
        tag = "spacelike"
    return CausalCharacter(tag=tag, L_value=value, tol=tol)


def horizontal_defect(L: Lagrangian, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """δ_i L = L_{,i} − G^j_i L_{·j}; vanishes for the canonical connection."""

    _require_admissible(L, x, y)
    yv = np.asarray(y, dtype=float)
    jet = jet_eval(L.field, x, yv, OrderMask(1, 3))
    metric = _metric_from_jet(L, jet)
    transport = jet.require("dxdy") @ yv - jet.require("dx")
    Gcoeff = _connection(jet, metric, yv, transport)
    return jet.require("dx") - Gcoeff.T @ jet.require("dy")


def covariant_derivative_along(L: Lagrangian, curve: Trajectory, X: np.ndarray) -> np.ndarray:
    """∇X^i = dX^i/dt + G^i_j X^j sampled along a geodesic lift."""

    values = np.asarray(X, dtype=float)
    if len(curve) < 3:
        raise GridTooCoarse(f"need at least 3 samples, got {len(curve)}")
    if values.shape != curve.x.shape:
        raise ValueError("vertical field must have one vector per trajectory sample")
    derivative = np.gradient(values, curve.t, axis=0, edge_order=2)
    result = np.empty_like(values)
    for k in range(len(curve)):
        coefficients = spray(L, curve.x[k], curve.y[k], connection=True).Gcoeff
        result[k] = derivative[k] + coefficients @ values[k]
    return result


def metricity_defect(L: Lagrangian, curve: Trajectory, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """d/dt g(X, Y) − g(∇X, Y) − g(X, ∇Y) along the curve."""

    Xv = np.asarray(X, dtype=float)
    Yv = np.asarray(Y, dtype=float)
    nabla_X = covariant_derivative_along(L, curve, Xv)
    nabla_Y = covariant_derivative_along(L, curve, Yv)
    metrics = [metric_tensor(L, curve.x[k], curve.y[k]).g for k in range(len(curve))]
    pairing = np.array([Xv[k] @ g @ Yv[k] for k, g in enumerate(metrics)])
    d_pairing = np.gradient(pairing, curve.t, edge_order=2)
    compatible = np.array(
        [nabla_X[k] @ g @ Yv[k] + Xv[k] @ g @ nabla_Y[k] for k, g in enumerate(metrics)]
    )
    return d_pairing - compatible


def structure_profile(
    L: Lagrangian, points: Iterable[Tuple[Sequence[float], Sequence[float]]], tol: float = 1e-10
) -> StructureProfile:
    """Index, positive-definiteness, spacetime, pseudo-Riemannian and flat-chart flags."""

    signatures = set()
    cartan = 0.0
    spray_size = 0.0
    count = 0
    for x, y in points:
        jet = jet_eval(L.field, x, y, OrderMask(1, 3))
        metric = _metric_from_jet(L, jet)
        signatures.add(metric.signature)
        scale = max(1.0, abs(jet.value))
        cartan = max(cartan, float(np.max(np.abs(jet.require("dydydy")))) / scale)
        transport = jet.require("dxdy") @ np.asarray(y, dtype=float) - jet.require("dx")
        spray_size = max(spray_size, float(np.max(np.abs(0.5 * metric.g_inv @ transport)) / scale))
        count += 1
    if count == 0:
        raise ValueError("structure profile needs at least one point")
    if len(signatures) != 1:
        logger.debug("%s: signatures vary across samples: %s", L.label, sorted(signatures))
    signature = sorted(signatures)[0] if L.signature is None else L.signature
    q, _ = signature
    return StructureProfile(
        signature=signature,
        positive_definite=q == 0 and len(signatures) == 1,
        finsler_spacetime=q == L.n - 1 and len(signatures) == 1,
        pseudo_riemannian=cartan <= tol,
        flat_in_chart=spray_size <= tol,
        samples=count,
    )


__all__ = [
    "direction_scale",
    "metric_from_hessian",
    "metric_tensor",
    "lower_index",
    "finsler_norm",
    "angular_metric",
    "spray",
    "causal_character",
    "horizontal_defect",
    "covariant_derivative_along",
    "metricity_defect",
    "structure_profile",
]
