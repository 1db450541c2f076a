from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calc import autodiff as ad
from calc.autodiff import Dual, ScalarField, fd_check, jacobian, jet_eval, primal
from calc.conformal import VectorFieldSpec
from calc.lagrangians import (
    DiffeoSpec,
    conformal_deform,
    make_berwald_moor,
    make_minkowski,
    make_pseudo_euclidean,
    make_weighted_product,
    pullback,
    rescale_by_field,
)
from calc.tolerances import TOLERANCE_DEFAULTS
from core.expressions import parse
from core.probes import draw_points
from models.errors import DomainError, OrderUnsupported, SingularJacobian
from models.geometry import OrderMask


def _cubic_field() -> ScalarField:
    # F = x0 · (y0)² · y1
    return ScalarField(2, lambda x, y: x[0] * y[0] * y[0] * y[1], "cubic")


def test_jet_blocks_of_polynomial():
    jet = jet_eval(_cubic_field(), [2.0, 0.0], [3.0, 5.0], OrderMask(1, 3))

    assert jet.value == pytest.approx(90.0)
    np.testing.assert_allclose(jet.require("dx"), [45.0, 0.0])
    np.testing.assert_allclose(jet.require("dy"), [60.0, 18.0])
    np.testing.assert_allclose(jet.require("dydy"), [[20.0, 12.0], [12.0, 0.0]])
    # dxdy[i][j] = ∂²F/∂y^i∂x^j
    np.testing.assert_allclose(jet.require("dxdy"), [[30.0, 0.0], [9.0, 0.0]])
    third = jet.require("dydydy")
    assert third[0, 0, 1] == pytest.approx(4.0)
    assert third[1, 0, 0] == pytest.approx(4.0)
    assert third[1, 1, 1] == pytest.approx(0.0)
    np.testing.assert_allclose(jet.require("dxdydy")[0], [[10.0, 6.0], [6.0, 0.0]])
    np.testing.assert_allclose(jet.require("dxdydy")[1], np.zeros((2, 2)))


def test_unrequested_block_raises():
    jet = jet_eval(_cubic_field(), [1.0, 1.0], [1.0, 1.0], OrderMask(0, 2))
    assert jet.dx is None
    with pytest.raises(OrderUnsupported):
        jet.require("dx")


def test_order_mask_limits():
    with pytest.raises(OrderUnsupported):
        OrderMask(2, 0)
    with pytest.raises(OrderUnsupported):
        OrderMask(0, 4)


def test_dual_path_reproduces_plain_value():
    field = ScalarField(2, lambda x, y: ad.exp(x[0]) * ad.sin(x[1]) * y[0] * y[1], "mixed")
    x, y = [0.3, 1.1], [0.7, -1.9]
    plain = field(x, y)
    jet = jet_eval(field, x, y, OrderMask(1, 2))
    assert jet.value == plain


def test_log_of_non_positive_raises():
    with pytest.raises(DomainError):
        ad.log(Dual(0.0, 1.0))
    with pytest.raises(DomainError):
        ad.log(-1.0)


def test_power_rules():
    assert ad.power(-2.0, 3.0) == pytest.approx(-8.0)
    with pytest.raises(DomainError):
        ad.power(-2.0, 0.5)
    with pytest.raises(DomainError):
        ad.power(0.0, -1.0)
    result = ad.power(Dual(2.0, 1.0), 3.0)
    assert result.p == pytest.approx(8.0)
    assert result.t == pytest.approx(12.0)


@given(st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False))
@settings(max_examples=200, deadline=None)
def test_sin_tangent_is_cos(value: float):
    result = ad.sin(Dual(value, 1.0))
    assert result.p == pytest.approx(math.sin(value))
    assert result.t == pytest.approx(math.cos(value))


@given(
    st.floats(min_value=0.1, max_value=5.0, allow_nan=False),
    st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
)
@settings(max_examples=200, deadline=None)
def test_quotient_rule(a: float, b: float):
    result = ad.div(Dual(b, 1.0), Dual(a, 0.0))
    assert result.t == pytest.approx(1.0 / a)
    assert primal(result) == pytest.approx(b / a)


def test_fd_oracle_agrees_on_berwald_moor():
    L = make_berwald_moor(3)
    report = fd_check(L.field, [1.0, 0.5, 2.0], [0.6, 0.5, 0.9], OrderMask(1, 3))
    assert report.max_relative <= 1e-6
    assert set(report.blocks) == {"dx", "dy", "dydy", "dxdy", "dydydy", "dxdydy"}


def test_jacobian_of_componentwise_map():
    f = DiffeoSpec.from_sources(["x0+x0^3", "x1+x1^3"], kind="componentwise")
    value = jacobian(f, [1.0, 2.0])
    np.testing.assert_allclose(value.matrix, np.diag([4.0, 13.0]))
    assert value.det == pytest.approx(52.0)


def test_singular_jacobian_raises():
    f = DiffeoSpec.from_sources(["x0^3", "x1"], kind="componentwise")
    with pytest.raises(SingularJacobian):
        jacobian(f, [0.0, 1.0])


BUILT_IN_LAGRANGIANS = {
    "pseudo-euclidean": lambda: make_pseudo_euclidean([1, -1, -1]),
    "minkowski": lambda: make_minkowski(2),
    "berwald-moor-2": lambda: make_berwald_moor(2),
    "berwald-moor-3": lambda: make_berwald_moor(3),
    "berwald-moor-4": lambda: make_berwald_moor(4),
    "weighted-product": lambda: make_weighted_product(make_pseudo_euclidean([1]), make_minkowski(2), 0.4),
    "conformal": lambda: conformal_deform(make_minkowski(2), parse("sin(x0)+x1", 2)),
    "pullback": lambda: pullback(make_minkowski(2), DiffeoSpec.from_sources(["x0+x0^3", "x1+x1^3"], kind="componentwise")),
    "rescaled": lambda: rescale_by_field(make_berwald_moor(2), VectorFieldSpec.from_sources(["x0", "x1"], label="radial")),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(BUILT_IN_LAGRANGIANS))
def test_fd_oracle_agrees_on_built_in_lagrangians(name: str):
    L = BUILT_IN_LAGRANGIANS[name]()
    worst = max(fd_check(L.field, x, y).max_relative for x, y in draw_points(L, 100, 2024))
    assert worst <= TOLERANCE_DEFAULTS["fd"]
