from __future__ import annotations

import dataclasses
import logging

import numpy as np
import pytest

from calc import finsler as fg
from calc.geodesics import integrate_geodesic
from calc.lagrangians import conformal_deform, make_berwald_moor, make_minkowski
from core.expressions import parse
from models.errors import DegenerateMetric, GridTooCoarse, NotAdmissible, NullDirection
from models.geometry import Trajectory


def test_minkowski_metric(minkowski2):
    metric = fg.metric_tensor(minkowski2, [0.0, 0.0], [1.0, 0.3])
    np.testing.assert_allclose(metric.g, np.diag([1.0, -1.0]))
    np.testing.assert_allclose(metric.g @ metric.g_inv, np.eye(2), atol=1e-12)
    assert metric.signature == (1, 1)


def test_berwald_moor_metric(bm2):
    metric = fg.metric_tensor(bm2, [1.0, 1.0], [0.5, 2.0])
    np.testing.assert_allclose(metric.g, [[0.0, 0.5], [0.5, 0.0]], atol=1e-14)
    np.testing.assert_allclose(sorted(metric.eigenvalues), [-0.5, 0.5])
    assert metric.signature == (1, 1)


def test_conformal_metric_scales(minkowski2):
    L = conformal_deform(minkowski2, parse("x0", 2))
    metric = fg.metric_tensor(L, [np.log(2.0), 0.0], [1.0, 0.2])
    np.testing.assert_allclose(metric.g, np.diag([2.0, -2.0]), rtol=1e-12)


def test_metric_outside_admissible_set(bm2):
    with pytest.raises(NotAdmissible):
        fg.metric_tensor(bm2, [1.0, 1.0], [0.0, 1.0])


def test_angular_metric_minkowski(minkowski2):
    angular = fg.angular_metric(minkowski2, [0.0, 0.0], [1.0, 0.0])
    np.testing.assert_allclose(angular.y_lower, [1.0, 0.0])
    np.testing.assert_allclose(angular.h, np.diag([0.0, -1.0]), atol=1e-14)
    np.testing.assert_allclose(angular.h @ np.array([1.0, 0.0]), [0.0, 0.0], atol=1e-14)


def test_angular_metric_identities_on_bm3():
    L = make_berwald_moor(3)
    x, y = [1.0, 1.0, 1.0], np.array([0.4, 0.7, 1.3])
    angular = fg.angular_metric(L, x, y)
    metric = fg.metric_tensor(L, x, y)
    assert np.max(np.abs(angular.h @ y)) <= 1e-9
    assert np.sum(angular.h_upper * metric.g) == pytest.approx(2.0, abs=1e-8)


def test_angular_metric_rejects_null(minkowski2):
    with pytest.raises(NullDirection):
        fg.angular_metric(minkowski2, [0.0, 0.0], [1.0, 1.0])


def test_flat_spray_vanishes(minkowski2, bm2):
    np.testing.assert_allclose(fg.spray(minkowski2, [0.3, 0.1], [1.0, 0.4]).G2, [0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(fg.spray(bm2, [0.3, 0.1], [1.0, 0.4]).G2, [0.0, 0.0], atol=1e-14)


def test_conformal_spray_closed_form(minkowski2):
    L = conformal_deform(minkowski2, parse("x0", 2))
    np.testing.assert_allclose(fg.spray(L, [0.0, 0.0], [2.0, 1.0]).G2, [2.5, 2.0], rtol=1e-12)


def test_spray_is_two_homogeneous():
    L = conformal_deform(make_berwald_moor(3), parse("sin(x0)+x1*x2", 3))
    x, y = [0.6, 1.1, 0.8], np.array([0.5, 0.9, 0.7])
    once = fg.spray(L, x, y).G2
    twice = fg.spray(L, x, 2.0 * y).G2
    np.testing.assert_allclose(twice, 4.0 * once, rtol=1e-8, atol=1e-12)


def test_connection_is_y_derivative_of_spray(minkowski2):
    L = conformal_deform(minkowski2, parse("sin(x0)+x1", 2))
    x, y = np.array([0.4, 0.2]), np.array([1.0, 0.3])
    coefficients = fg.spray(L, x, y, connection=True).Gcoeff
    step = 1e-6
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        fd = (fg.spray(L, x, y + e).G2 - fg.spray(L, x, y - e).G2) / (4.0 * step)
        np.testing.assert_allclose(coefficients[:, j], fd, rtol=1e-5, atol=1e-7)
    # G^i_j y^j = 2G^i
    np.testing.assert_allclose(coefficients @ y, fg.spray(L, x, y).G2, rtol=1e-10)


def test_causal_character(minkowski2):
    assert fg.causal_character(minkowski2, [0, 0], [1.0, 0.2]).tag == "timelike"
    assert fg.causal_character(minkowski2, [0, 0], [0.2, 1.0]).tag == "spacelike"
    assert fg.causal_character(minkowski2, [0, 0], [1.0, 1.0]).tag == "null"


def test_horizontal_derivative_of_L_vanishes():
    L = conformal_deform(make_minkowski(3), parse("0.3*x0*x1+cos(x2)", 3))
    defect = fg.horizontal_defect(L, [0.2, 0.5, 0.1], [1.0, 0.3, 0.2])
    assert np.max(np.abs(defect)) <= 1e-8


def test_structure_profile_of_minkowski(minkowski2):
    points = [([0.1 * k, 0.0], [1.0, 0.1 * k]) for k in range(1, 5)]
    profile = fg.structure_profile(minkowski2, points)
    assert profile.signature == (1, 1)
    assert profile.finsler_spacetime
    assert profile.pseudo_riemannian
    assert profile.flat_in_chart
    assert not profile.positive_definite


def test_structure_profile_of_conformal_bm():
    L = conformal_deform(make_berwald_moor(3), parse("x0", 3))
    points = [([0.5, 1.0, 1.0], [0.4, 0.6, 0.9]), ([1.0, 1.0, 1.0], [0.5, 0.5, 1.1])]
    profile = fg.structure_profile(L, points)
    assert not profile.pseudo_riemannian
    assert not profile.flat_in_chart


def test_velocity_is_parallel_along_geodesic(minkowski2):
    L = conformal_deform(minkowski2, parse("0.5*x0", 2))
    traj = integrate_geodesic(L, [0.0, 0.0], [1.0, 0.4], 0.2, 1e-3)
    nabla = fg.covariant_derivative_along(L, traj, traj.y)
    assert np.max(np.abs(nabla)) <= 1e-5


def test_metricity_along_geodesic(minkowski2):
    L = conformal_deform(minkowski2, parse("0.5*x0", 2))
    traj = integrate_geodesic(L, [0.0, 0.0], [1.0, 0.4], 0.2, 1e-3)
    X = np.tile([0.0, 1.0], (len(traj), 1))
    defect = fg.metricity_defect(L, traj, traj.y, X)
    assert np.max(np.abs(defect)) <= 1e-5


def test_lowered_velocity_and_norm(minkowski2):
    np.testing.assert_allclose(fg.lower_index(minkowski2, [0.0, 0.0], [2.0, 1.0]), [2.0, -1.0])
    assert fg.finsler_norm(minkowski2, [0.0, 0.0], [2.0, 1.0]) == pytest.approx(np.sqrt(3.0))
    assert fg.finsler_norm(minkowski2, [0.0, 0.0], [1.0, 2.0]) == pytest.approx(np.sqrt(3.0))


def test_zero_hessian_is_degenerate():
    with pytest.raises(DegenerateMetric):
        fg.metric_from_hessian(np.zeros((2, 2)))


def test_covariant_derivative_needs_three_samples():
    t = np.array([0.0, 0.1])
    points = np.column_stack([t, t])
    curve = Trajectory(t=t, x=points, y=np.ones_like(points), L0=0.0, step=0.1)
    with pytest.raises(GridTooCoarse):
        fg.covariant_derivative_along(make_minkowski(2), curve, curve.y)


def test_signature_mismatch_is_noted(minkowski2, caplog):
    L = dataclasses.replace(minkowski2, signature=(0, 2))
    with caplog.at_level(logging.WARNING, logger="calc.finsler"):
        metric = fg.metric_tensor(L, [0.0, 0.0], [2.0, 1.0])
    assert metric.signature == (1, 1)
    assert len(metric.notes) == 1
    assert "differs from declared (0, 2)" in metric.notes[0]
    assert "differs from declared" in caplog.text


def test_matching_signature_has_no_notes(minkowski2):
    assert fg.metric_tensor(minkowski2, [0.0, 0.0], [2.0, 1.0]).notes == ()
