from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from calc.finsler import metric_tensor
from calc.lagrangians import (
    DiffeoSpec,
    conformal_deform,
    hessian_signature,
    identity_map,
    inversion_map,
    make_berwald_moor,
    make_minkowski,
    make_pseudo_euclidean,
    make_weighted_product,
    pullback,
    pullback_metric,
    rescale_by_field,
    sample_admissible,
)
from calc.tolerances import PRODUCT_FACTOR_MARGIN
from core.expressions import parse
from models.errors import DomainError, SamplingExhausted, YDependentSigma


def test_minkowski_value(minkowski2):
    assert minkowski2.value([0.0, 0.0], [2.0, 1.0]) == pytest.approx(3.0)
    assert minkowski2.signature == (1, 1)
    assert make_minkowski(4).signature == (3, 1)


def test_pseudo_euclidean_signature():
    L = make_pseudo_euclidean([1, 1, -1])
    assert L.signature == (1, 2)
    assert hessian_signature(L.field, [0.0] * 3, [1.0, 0.0, 0.0]) == (1, 2)


def test_berwald_moor_values(bm2, bm3):
    assert bm2.value([1.0, 1.0], [2.0, 3.0]) == pytest.approx(6.0)
    assert bm3.value([1.0, 1.0, 1.0], [1.0, 2.0, 4.0]) == pytest.approx(4.0)
    assert bm3.value([1.0, 1.0, 1.0], [-1.0, 2.0, 4.0]) == pytest.approx(-4.0)


def test_berwald_moor_excludes_coordinate_planes(bm3):
    assert not bm3.is_admissible([1.0, 1.0, 1.0], [0.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        bm3.value([1.0, 1.0, 1.0], [0.0, 1.0, 1.0])


def test_berwald_moor_needs_two_dimensions():
    with pytest.raises(ValueError):
        make_berwald_moor(1)


def test_weighted_product_value_and_chamber():
    line = make_pseudo_euclidean([1])
    L = make_weighted_product(line, make_minkowski(2), 0.4)
    assert L.n == 3
    assert L.value([0.0] * 3, [2.0, 1.0, 0.0]) == pytest.approx(4.0**0.4)
    # L1 > 0, L2 < 0: negative sign chamber
    assert L.value([0.0] * 3, [2.0, 0.0, 1.0]) == pytest.approx(-(4.0**0.4))
    assert not L.is_admissible([0.0] * 3, [1.0, 1.0, 1.0])
    assert L.notes


def test_weighted_product_rejects_alpha():
    with pytest.raises(ValueError):
        make_weighted_product(make_minkowski(2), make_minkowski(2), 1.0)


def test_weighted_product_sampler_stays_in_principal_chamber():
    L1, L2 = make_minkowski(2), make_minkowski(2)
    L = make_weighted_product(L1, L2, 0.3)
    x = np.ones(4)
    for y in sample_admissible(L, x, 20, seed=5):
        assert L1.value(x[:2], y[:2]) > PRODUCT_FACTOR_MARGIN * float(y[:2] @ y[:2])
        assert L2.value(x[2:], y[2:]) > PRODUCT_FACTOR_MARGIN * float(y[2:] @ y[2:])


def test_conformal_deform_rejects_direction_dependence(minkowski2):
    with pytest.raises(YDependentSigma):
        conformal_deform(minkowski2, parse("x0*y0", 2))


def test_conformal_deform_value(minkowski2):
    L = conformal_deform(minkowski2, parse("x0", 2))
    assert L.value([np.log(2.0), 0.0], [1.0, 0.0]) == pytest.approx(2.0)


def test_pullback_by_cubic_map(minkowski2, cubic2):
    L = pullback(minkowski2, cubic2)
    x, y = [1.0, 2.0], [1.0, 1.0]
    assert L.value(x, y) == pytest.approx(4.0**2 - 13.0**2)


def test_pullback_metric_matches_metric_of_pullback(bm2, cubic2):
    x, y = [0.7, 1.2], [0.4, 0.9]
    direct = pullback_metric(bm2, cubic2, x, y)
    via_field = metric_tensor(pullback(bm2, cubic2), x, y).g
    np.testing.assert_allclose(direct, via_field, rtol=1e-12, atol=1e-12)


def test_inversion_scales_minkowski():
    L = make_minkowski(2)
    x, y = np.array([2.0, 0.5]), np.array([0.3, 0.8])
    q = x[0] ** 2 - x[1] ** 2
    assert pullback(L, inversion_map([1, -1])).value(x, y) == pytest.approx(L.value(x, y) / q**2)


def test_identity_pullback_is_unchanged(bm3):
    x, y = [0.5, 1.0, 1.5], [0.3, 0.4, 0.5]
    assert pullback(bm3, identity_map(3)).value(x, y) == pytest.approx(bm3.value(x, y))


def test_componentwise_map_checks_variables():
    with pytest.raises(ValueError):
        DiffeoSpec.from_sources(["x1", "x0"], kind="componentwise")


def test_rescale_by_radial_field(bm2, radial2):
    L = rescale_by_field(bm2, radial2)
    assert L.value([2.0, 0.5], [1.0, 3.0]) == pytest.approx(3.0)
    assert not L.is_admissible([1.0, 0.0], [1.0, 1.0])


def test_sampling_is_deterministic(bm3):
    x = [1.0, 1.0, 1.0]
    first = sample_admissible(bm3, x, 10, seed=42)
    second = sample_admissible(bm3, x, 10, seed=42)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0)
        assert bm3.is_admissible(x, a)


def test_sampling_gives_up_on_empty_admissible_set(minkowski2):
    nowhere = dataclasses.replace(minkowski2, admissible=lambda x, y: False)
    with pytest.raises(SamplingExhausted):
        sample_admissible(nowhere, [0.0, 0.0], 1, seed=0)
