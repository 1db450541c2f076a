"""Geodesic integration and trajectory-level diagnostics."""
from __future__ import annotations

import logging
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from calc.finsler import causal_character, direction_scale, spray
from calc.lagrangians import Lagrangian
from calc.tolerances import TOLERANCE_DEFAULTS
from models.errors import DegenerateMetric, DomainError, NotAdmissible, NotNull
from models.geometry import CurveClass, Trajectory

logger = logging.getLogger(__name__)

# Failures that end an integration early instead of aborting it.
TRUNCATING_ERRORS = (NotAdmissible, DomainError, DegenerateMetric)


def rk4_step(rhs: Callable[[List[Any]], List[Any]], state: Sequence[Any], h: float) -> List[Any]:
    """One classical Runge–Kutta step, generic over the scalar type of ``state``."""

    k1 = rhs(list(state))
    k2 = rhs([s + (0.5 * h) * k for s, k in zip(state, k1)])
    k3 = rhs([s + (0.5 * h) * k for s, k in zip(state, k2)])
    k4 = rhs([s + h * k for s, k in zip(state, k3)])
    return [
        s + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for s, a, b, c, d in zip(state, k1, k2, k3, k4)
    ]


def integrate_geodesic(
    L: Lagrangian,
    x0: Sequence[float],
    y0: Sequence[float],
    t_end: float,
    h: float,
    *,
    label: str = "",
) -> Trajectory:
    """Fixed-step RK4 on ẋ = y, ẏ = −2G(x, y); truncated with a flag when a step leaves A."""

    if h <= 0:
        raise ValueError("step size must be positive")
    x_start = np.asarray(x0, dtype=float)
    y_start = np.asarray(y0, dtype=float)
    if not L.is_admissible(x_start, y_start):
        raise NotAdmissible(f"{L.label}: geodesic start is outside A")
    steps = int(round(t_end / h))
    n = L.n
    r = np.zeros([steps + 1, n])
    v = np.zeros([steps + 1, n])
    r[0] = x_start
    v[0] = y_start

    def rhs(state: List[float]) -> List[float]:
        z = np.asarray(state, dtype=float)
        return list(np.concatenate([z[n:], -spray(L, z[:n], z[n:]).G2]))

    reason: Optional[str] = None
    last = 0
    for k in range(1, steps + 1):
        try:
            z = rk4_step(rhs, np.concatenate([r[k - 1], v[k - 1]]).tolist(), h)
        except TRUNCATING_ERRORS as exc:
            reason = f"{type(exc).__name__}: {exc}"
            break
        r[k], v[k] = z[:n], z[n:]
        if not L.is_admissible(r[k], v[k]):
            reason = "NotAdmissible: step left the admissible set"
            break
        last = k
    if reason is not None:
        logger.debug("%s: trajectory truncated at t=%.6g (%s)", L.label, last * h, reason)
    count = last + 1
    return Trajectory(
        t=np.arange(count) * h,
        x=r[:count].copy(),
        y=v[:count].copy(),
        L0=L.value(x_start, y_start),
        step=h,
        order=4,
        admissible=np.ones(count, dtype=bool),
        truncated=reason is not None,
        reason=reason,
        label=label or L.label,
    )


def energies(traj: Trajectory, L: Lagrangian) -> np.ndarray:
    return np.array([L.value(traj.x[k], traj.y[k]) for k in range(len(traj))])


def energy_drift(traj: Trajectory, L: Lagrangian) -> float:
    """max_k |L(x_k, y_k) − L0|."""

    if len(traj) == 0:
        return 0.0
    return float(np.max(np.abs(energies(traj, L) - traj.L0)))


def arc_length(traj: Trajectory, L: Lagrangian) -> float:
    """∫ F(x, ẋ) dt by the trapezoid rule, F = sqrt|L|."""

    if len(traj) < 2:
        return 0.0
    F = np.sqrt(np.abs(energies(traj, L)))
    return float(np.sum(0.5 * (F[1:] + F[:-1]) * np.diff(traj.t)))


def classify_curve(traj: Trajectory, L: Lagrangian, tol_null: Optional[float] = None) -> CurveClass:
    tags = {causal_character(L, traj.x[k], traj.y[k], tol_null).tag for k in range(len(traj))}
    if len(tags) == 1:
        return tags.pop()  # type: ignore[return-value]
    return "mixed"


def null_direction(
    L: Lagrangian,
    x: Sequence[float],
    y_timelike: Sequence[float],
    y_spacelike: Sequence[float],
    tol: Optional[float] = None,
    max_iter: int = 200,
) -> np.ndarray:
    """Bisect the segment between a timelike and a spacelike direction down to |L| ≤ tol·‖y‖²."""

    tolerance = TOLERANCE_DEFAULTS["null_snap"] if tol is None else tol
    xv = np.asarray(x, dtype=float)
    lo = np.asarray(y_timelike, dtype=float)
    hi = np.asarray(y_spacelike, dtype=float)
    if not (L.value(xv, lo) > 0 > L.value(xv, hi)):
        raise ValueError("null_direction needs a timelike and a spacelike direction")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not L.is_admissible(xv, mid):
            raise NotAdmissible(f"{L.label}: bisection left the admissible set at y={mid.tolist()}")
        value = L.value(xv, mid)
        if abs(value) <= tolerance * direction_scale(mid):
            return mid
        if value > 0:
            lo = mid
        else:
            hi = mid
    raise NotNull(f"{L.label}: no direction with |L| ≤ {tolerance:g}·‖y‖² after {max_iter} bisections")


def _resample(points: np.ndarray, length: float, count: int) -> np.ndarray:
    segments = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(segments)])
    targets = np.linspace(0.0, length, count)
    return np.column_stack([np.interp(targets, cumulative, points[:, i]) for i in range(points.shape[1])])


def _polyline_length(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def reparam_compare(A: Trajectory, B: Trajectory, samples: int = 501) -> float:
    """Symmetric discrete Hausdorff distance between the images of A and B.

    Both polylines are resampled by Euclidean arclength over their common length
    from the start point, so the result does not depend on parametrisation.
    """

    if len(A) == 0 or len(B) == 0:
        raise ValueError("trajectories must be nonempty")
    common = min(_polyline_length(A.x), _polyline_length(B.x))
    if common == 0.0:
        return float(np.linalg.norm(A.x[0] - B.x[0]))
    left = _resample(A.x, common, samples)
    right = _resample(B.x, common, samples)
    distances = np.linalg.norm(left[:, None, :] - right[None, :, :], axis=2)
    return float(max(distances.min(axis=1).max(), distances.min(axis=0).max()))


def trajectory_frame(traj: Trajectory, L: Lagrangian) -> pd.DataFrame:
    """Columns ``t, x0.., y0.., L`` in sample order."""

    n = traj.n
    frame = pd.DataFrame({"t": traj.t})
    for i in range(n):
        frame[f"x{i}"] = traj.x[:, i]
    for i in range(n):
        frame[f"y{i}"] = traj.y[:, i]
    frame["L"] = energies(traj, L) if len(traj) else np.zeros(0)
    return frame


__all__ = [
    "TRUNCATING_ERRORS",
    "rk4_step",
    "integrate_geodesic",
    "energies",
    "energy_drift",
    "arc_length",
    "classify_curve",
    "null_direction",
    "reparam_compare",
    "trajectory_frame",
]
