from __future__ import annotations

import numpy as np
import pytest

from calc import geodesics as geo
from calc.finsler import spray
from calc.lagrangians import conformal_deform
from calc.tolerances import TOLERANCE_DEFAULTS
from core.expressions import parse
from models.errors import NotAdmissible
from models.geometry import Trajectory


def test_rk4_step_matches_taylor_polynomial():
    h = 0.1
    (value,) = geo.rk4_step(lambda state: [state[0]], [1.0], h)
    assert value == pytest.approx(1 + h + h**2 / 2 + h**3 / 6 + h**4 / 24, rel=1e-15)


def test_minkowski_geodesic_is_straight(minkowski2):
    traj = geo.integrate_geodesic(minkowski2, [0.0, 0.0], [1.0, 1.0], 1.0, 0.01)
    assert not traj.truncated
    np.testing.assert_allclose(traj.x[-1], [1.0, 1.0], atol=1e-12)
    assert geo.energy_drift(traj, minkowski2) == pytest.approx(0.0, abs=1e-15)
    assert geo.classify_curve(traj, minkowski2) == "null"


def test_berwald_moor_geodesic_is_straight(bm2):
    traj = geo.integrate_geodesic(bm2, [1.0, 1.0], [0.5, 2.0], 1.0, 0.05)
    np.testing.assert_allclose(traj.x[-1], [1.5, 3.0], atol=1e-12)


def test_null_geodesic_stays_null(minkowski2):
    L = conformal_deform(minkowski2, parse("x0", 2))
    traj = geo.integrate_geodesic(L, [0.0, 0.0], [1.0, 1.0], 1.0, 1e-3)
    assert np.max(np.abs(geo.energies(traj, L))) <= 1e-8


def test_energy_drift_and_order(minkowski2):
    L = conformal_deform(minkowski2, parse("x0", 2))
    x0, y0 = [0.0, 0.0], [1.0, 0.3]
    fine = geo.energy_drift(geo.integrate_geodesic(L, x0, y0, 1.0, 1e-3), L)
    assert fine <= 1e-8
    coarse = geo.energy_drift(geo.integrate_geodesic(L, x0, y0, 1.0, 0.05), L)
    halved = geo.energy_drift(geo.integrate_geodesic(L, x0, y0, 1.0, 0.025), L)
    assert TOLERANCE_DEFAULTS["order_low"] <= coarse / halved <= TOLERANCE_DEFAULTS["order_high"]


def test_trajectory_truncates_at_domain_boundary(minkowski2):
    L = conformal_deform(minkowski2, parse("ln(x0)", 2))
    traj = geo.integrate_geodesic(L, [0.5, 0.0], [-1.0, 0.0], 1.0, 0.01)
    assert traj.truncated
    assert traj.reason
    assert len(traj) < 101
    assert np.all(traj.x[:, 0] > 0)


def test_start_outside_admissible_set(bm2):
    with pytest.raises(NotAdmissible):
        geo.integrate_geodesic(bm2, [1.0, 1.0], [0.0, 1.0], 1.0, 0.1)


def test_step_must_be_positive(minkowski2):
    with pytest.raises(ValueError):
        geo.integrate_geodesic(minkowski2, [0.0, 0.0], [1.0, 0.0], 1.0, 0.0)


def test_arc_length_of_straight_line(minkowski2):
    traj = geo.integrate_geodesic(minkowski2, [0.0, 0.0], [1.0, 0.5], 1.0, 0.1)
    assert geo.arc_length(traj, minkowski2) == pytest.approx(np.sqrt(0.75))
    assert geo.classify_curve(traj, minkowski2) == "timelike"


def test_null_direction_bisection(minkowski2):
    y = geo.null_direction(minkowski2, [0.0, 0.0], [1.0, 0.0], [0.0, 1.0])
    np.testing.assert_allclose(y, [0.5, 0.5])


def test_null_direction_needs_both_sides(minkowski2):
    with pytest.raises(ValueError):
        geo.null_direction(minkowski2, [0.0, 0.0], [1.0, 0.0], [1.0, 0.2])


def _line(points: np.ndarray, times: np.ndarray) -> Trajectory:
    return Trajectory(t=times, x=points, y=np.zeros_like(points), L0=0.0, step=float(times[1] - times[0]))


def test_reparam_compare_ignores_parametrisation():
    t = np.linspace(0.0, 1.0, 101)
    uniform = _line(np.column_stack([t, t]), t)
    squeezed = _line(np.column_stack([t**2, t**2]), t)
    assert geo.reparam_compare(uniform, squeezed) <= 1e-10


def test_reparam_compare_detects_offset():
    t = np.linspace(0.0, 1.0, 101)
    base = _line(np.column_stack([t, np.zeros_like(t)]), t)
    shifted = _line(np.column_stack([t, np.full_like(t, 0.01)]), t)
    assert geo.reparam_compare(base, shifted) == pytest.approx(0.01)


def test_trajectory_frame_columns(minkowski2):
    traj = geo.integrate_geodesic(minkowski2, [0.0, 0.0], [1.0, 0.5], 0.5, 0.1)
    frame = geo.trajectory_frame(traj, minkowski2)
    assert list(frame.columns) == ["t", "x0", "x1", "y0", "y1", "L"]
    assert len(frame) == len(traj)
    np.testing.assert_allclose(frame["L"], 0.75)


def test_integration_advances_by_rk4_steps(minkowski2):
    L = conformal_deform(minkowski2, parse("x0", 2))

    def rhs(state):
        z = np.asarray(state, dtype=float)
        return list(np.concatenate([z[2:], -spray(L, z[:2], z[2:]).G2]))

    state = [0.0, 0.0, 1.0, 0.3]
    for _ in range(3):
        state = geo.rk4_step(rhs, state, 0.1)
    traj = geo.integrate_geodesic(L, [0.0, 0.0], [1.0, 0.3], 0.3, 0.1)
    assert len(traj) == 4
    np.testing.assert_allclose(np.concatenate([traj.x[-1], traj.y[-1]]), state, rtol=1e-14, atol=1e-15)
