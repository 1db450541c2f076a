from __future__ import annotations

import numpy as np
import pytest

from calc import conformal as cf
from calc.geodesics import integrate_geodesic
from calc.lagrangians import (
    DiffeoSpec,
    identity_map,
    make_berwald_moor,
    sample_admissible,
)
from core.expressions import parse
from models.errors import AllSamplesNull, FlowBlowup, InconclusiveSampling, NotConformalAt, NotNull


def _points(L, bases, per_point, seed=0):
    points = []
    for index, x in enumerate(bases):
        for y in sample_admissible(L, x, per_point, seed + index):
            points.append((np.asarray(x, dtype=float), y))
    return points


BASES2 = [[0.6, 0.9], [1.1, 0.7], [1.4, 1.3]]


def test_componentwise_map_is_conformal_for_berwald_moor(bm2, cubic2):
    sigma = parse("ln((1+3*x0^2)*(1+3*x1^2))", 2)
    verdict = cf.conformal_residual(bm2, bm2, cubic2, sigma, _points(bm2, BASES2, 10), {"residual": 1e-12})
    assert verdict.verdict == "conformal"
    assert verdict.max_residual <= 1e-12
    assert verdict.map_class == "general"


def test_identity_is_isometry(minkowski2):
    verdict = cf.conformal_residual(minkowski2, minkowski2, identity_map(2), parse("0", 2), _points(minkowski2, BASES2, 5))
    assert verdict.verdict == "conformal"
    assert verdict.map_class == "isometry"


def test_stretch_is_not_conformal_for_minkowski(minkowski2):
    stretch = DiffeoSpec.from_sources(["x0+x0^3", "x1"], kind="componentwise")
    verdict = cf.conformal_residual(minkowski2, minkowski2, stretch, parse("0", 2), _points(minkowski2, BASES2, 10))
    assert verdict.verdict == "not-conformal"
    assert verdict.anisotropic_points


def test_estimated_factor_for_exponential_map():
    L = make_berwald_moor(3)
    f = DiffeoSpec.from_sources(["exp(x0)", "exp(x1)", "exp(x2)"], kind="componentwise")
    x = [0.5, 1.0, 1.5]
    estimate = cf.estimate_conformal_factor(L, L, f, x, sample_admissible(L, x, 8, 1))
    assert estimate.sigma == pytest.approx((2.0 / 3.0) * 3.0, abs=1e-10)
    assert estimate.anisotropy <= 1e-12


def test_estimate_rejects_anisotropic_pullback(minkowski2):
    stretch = DiffeoSpec.from_sources(["x0+x0^3", "x1"], kind="componentwise")
    x = [1.0, 1.0]
    with pytest.raises(NotConformalAt):
        cf.estimate_conformal_factor(minkowski2, minkowski2, stretch, x, sample_admissible(minkowski2, x, 8, 2))


def test_radial_flow_is_scaling(radial2):
    moved = cf.flow(radial2, [1.0, 2.0], 0.5)
    np.testing.assert_allclose(moved, np.exp(0.5) * np.array([1.0, 2.0]), rtol=1e-10)
    assert cf.flow(radial2, [1.0, 2.0], 0.0) == [1.0, 2.0]
    jac = cf.flow_map(radial2, 0.5).jacobian([1.0, 2.0])
    np.testing.assert_allclose(jac.matrix, np.exp(0.5) * np.eye(2), rtol=1e-10)


def test_flow_blowup():
    xi = cf.VectorFieldSpec.from_sources(["x0^2", "0"])
    with pytest.raises(FlowBlowup):
        cf.flow(xi, [1.0, 0.0], 2.0)


def test_lie_derivative_matches_flow_difference(bm2, radial2):
    x, y = [0.8, 1.3], np.array([0.6, 0.8])
    exact = cf.lie_derivative_L(bm2, radial2, x, y)
    assert exact == pytest.approx(2.0 * bm2.value(x, y), rel=1e-12)
    assert cf.lie_derivative_fd(bm2, radial2, x, y) == pytest.approx(exact, rel=1e-6)


def test_radial_field_is_conformal(minkowski2, radial2):
    verdict = cf.conformal_field_report(minkowski2, radial2, BASES2, 8, seed=4)
    assert verdict.verdict == "conformal"
    np.testing.assert_allclose(verdict.factors, 2.0, atol=1e-10)
    assert verdict.on_cone_max <= 1e-8


def test_boost_is_killing(minkowski2, boost2):
    verdict = cf.conformal_field_report(minkowski2, boost2, BASES2, 8, seed=4)
    assert verdict.verdict == "killing"


def test_shear_is_not_conformal(minkowski2):
    shear = cf.VectorFieldSpec.from_sources(["x0^2", "0"])
    verdict = cf.conformal_field_report(minkowski2, shear, BASES2, 8, seed=4)
    assert verdict.verdict == "not-conformal"
    assert verdict.anisotropy > 1e-8


def test_spray_defect_split_off_cone(minkowski2):
    deformed = cf.conformal_deform(minkowski2, parse("x0", 2))
    defect = cf.spray_defect(minkowski2, deformed, [0.0, 0.0], [2.0, 1.0])
    np.testing.assert_allclose(defect.D, [2.5, 2.0], rtol=1e-12)
    assert defect.parallel == pytest.approx(1.0)
    np.testing.assert_allclose(defect.transverse, [0.5, 1.0], rtol=1e-12)
    assert not defect.null


def test_spray_defect_on_cone(minkowski2):
    deformed = cf.conformal_deform(minkowski2, parse("x0", 2))
    defect = cf.spray_defect(minkowski2, deformed, [0.0, 0.0], [1.0, 1.0])
    np.testing.assert_allclose(defect.D, [1.0, 1.0], rtol=1e-12)
    assert defect.null
    assert defect.transverse_norm <= 1e-12


def test_spray_relation(bm2):
    sigma = parse("x0+x1", 2)
    for x, y in _points(bm2, BASES2, 5):
        assert cf.spray_relation_residual(bm2, sigma, x, y) <= 1e-8


def test_weyl_constant_sigma_keeps_spray(minkowski2):
    report = cf.weyl_probe(minkowski2, parse("1", 2), _points(minkowski2, BASES2, 10))
    assert report.constant_sigma
    assert report.passed
    assert report.max_defect <= 1e-10


def test_weyl_finds_witness(minkowski2):
    report = cf.weyl_probe(minkowski2, parse("x0", 2), _points(minkowski2, BASES2, 10))
    assert report.witness is not None
    assert report.witness.value >= 1e-3


def test_weyl_inconclusive_along_gradient(minkowski2):
    # y parallel to ∇σ: the spray changes only along y
    points = [(np.array([0.0, 0.0]), np.array([1.0, 0.0]))]
    with pytest.raises(InconclusiveSampling):
        cf.weyl_probe(minkowski2, parse("x0", 2), points)


def test_conservation_along_null_geodesic(minkowski2, radial2):
    traj = integrate_geodesic(minkowski2, [0.5, 0.2], [1.0, 1.0], 1.0, 0.01)
    assert cf.conservation_along_null(minkowski2, radial2, traj) <= 1e-10


def test_conservation_needs_null_trajectory(minkowski2, radial2):
    traj = integrate_geodesic(minkowski2, [0.5, 0.2], [1.0, 0.2], 0.1, 0.01)
    with pytest.raises(NotNull):
        cf.conservation_along_null(minkowski2, radial2, traj)


def test_associated_metric(bm2, radial2):
    metric = cf.associated_metric(bm2, radial2).evaluate([0.5, 1.5])
    assert metric.signature == (1, 1)
    assert cf.associated_conformal_check(bm2, parse("x0*x1", 2), radial2, [0.5, 1.5]) <= 1e-12


def test_associated_lemma(bm2, radial2):
    report = cf.associated_lemma_probe(bm2, radial2, [0.05, 0.2], [[0.5, 1.0], [1.5, 0.75]], samples_per_point=4)
    assert report.passed
    for entry in report.entries:
        assert entry.fitted_factor == pytest.approx(np.exp(2.0 * entry.eps), rel=1e-8)


def test_essential_scan_rescales_radial_field(bm2, radial2):
    axis = np.linspace(0.25, 2.0, 3)
    grid = [np.array([a, b]) for a in axis for b in axis]
    scan = cf.essential_scan(bm2, radial2, grid, samples_per_point=4)
    assert not scan.essential_candidate
    assert scan.killing_after_rescaling
    assert scan.alpha_min > 0


def test_essential_scan_flags_null_points(minkowski2, boost2):
    axis = np.linspace(0.25, 2.0, 3)
    grid = [np.array([a, b]) for a in axis for b in axis]
    scan = cf.essential_scan(minkowski2, boost2, grid)
    assert scan.essential_candidate
    assert (0.25, 0.25) in scan.null_points
    assert scan.rescaled_verdict is None


def test_estimate_needs_a_non_null_sample(minkowski2):
    with pytest.raises(AllSamplesNull):
        cf.estimate_conformal_factor(minkowski2, minkowski2, identity_map(2), [0.0, 0.0], [[1.0, 1.0], [1.0, -1.0]])
