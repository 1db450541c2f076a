from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calc.autodiff import ScalarField, fd_check, jet_eval
from calc.tolerances import TOLERANCE_DEFAULTS
from core.expressions import evaluate, free_vars, is_constant, parse, to_source, y_variables
from models.errors import DomainError, IndexOutOfRange, ParseError, UnknownIdentifier
from models.geometry import OrderMask


@pytest.mark.parametrize(
    ("source", "expected"),
    [
        ("2+3*4", 14.0),
        ("(1+2)*3", 9.0),
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("2^-1", 0.5),
        ("8/4/2", 1.0),
        ("1-2-3", -4.0),
        ("1.5e2", 150.0),
        ("ln(exp(2))", 2.0),
        ("sqrt(16)+abs(-3)", 7.0),
    ],
)
def test_precedence_and_associativity(source: str, expected: float):
    assert parse(source, 1).evaluate_xy([0.0]) == pytest.approx(expected)


def test_variables_and_functions():
    expr = parse("x0*y1 + sin(x1)", 2)
    value = expr.evaluate_xy([2.0, 0.5], [0.0, 3.0])
    assert value == pytest.approx(6.0 + math.sin(0.5))
    assert evaluate(expr, {"x0": 2.0, "x1": 0.5, "y1": 3.0}) == pytest.approx(value)


def test_free_variables():
    expr = parse("x0 + y1*tanh(x1)", 2)
    assert free_vars(expr) == {"x0", "x1", "y1"}
    assert y_variables(expr) == {"y1"}
    assert not is_constant(expr)
    assert is_constant(parse("2*exp(1)", 3))


def test_error_offset_is_one_based():
    with pytest.raises(ParseError) as info:
        parse("x0 + * 2", 1)
    assert info.value.offset == 6
    assert info.value.found == "*"
    assert "number" in info.value.expected


def test_error_offset_counts_utf8_bytes():
    # U+00A0 is whitespace and two bytes long in UTF-8.
    with pytest.raises(ParseError) as info:
        parse("x0\u00a0*\u00a0)", 1)
    assert info.value.offset == 8


def test_unbalanced_parenthesis():
    with pytest.raises(ParseError) as info:
        parse("(x0+1", 1)
    assert info.value.found == "end of input"
    assert ")" in info.value.expected


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        parse("1 + foo(x0)", 1)
    assert info.value.offset == 5
    assert info.value.name == "foo"


def test_index_out_of_range():
    with pytest.raises(IndexOutOfRange) as info:
        parse("x0 + x3", 2)
    assert info.value.offset == 6
    assert info.value.dimension == 2


def test_unexpected_character():
    with pytest.raises(ParseError) as info:
        parse("x0 $ 1", 1)
    assert info.value.offset == 4


def test_domain_errors_surface_on_evaluation():
    with pytest.raises(DomainError):
        parse("ln(x0)", 1).evaluate_xy([0.0])
    with pytest.raises(DomainError):
        parse("1/x0", 1).evaluate_xy([0.0])


_numbers = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(repr)
_variables = st.sampled_from(["x0", "x1", "y0", "y1"])


def _expressions(
    numbers: st.SearchStrategy[str], operators: list[str], functions: list[str], max_leaves: int
) -> st.SearchStrategy[str]:
    def extend(children: st.SearchStrategy[str]) -> st.SearchStrategy[str]:
        binary = st.tuples(children, st.sampled_from(operators), children).map(
            lambda t: f"({t[0]}){t[1]}({t[2]})"
        )
        unary = children.map(lambda s: f"-({s})")
        calls = st.tuples(st.sampled_from(functions), children).map(lambda t: f"{t[0]}({t[1]})")
        return binary | unary | calls

    return st.recursive(numbers | _variables, extend, max_leaves=max_leaves)


_sources = _expressions(_numbers, ["+", "-", "*", "/", "^"], ["sin", "exp", "ln", "abs"], 12)
# Smooth everywhere and bounded on the unit box.
_smooth_sources = _expressions(
    st.floats(min_value=0.5, max_value=2.0, allow_nan=False).map(repr), ["+", "-", "*"], ["sin", "cos", "tanh"], 8
)


@given(_sources)
@settings(max_examples=300, deadline=None)
def test_printed_source_parses_to_same_tree(source: str):
    expr = parse(source, 2)
    again = parse(to_source(expr), 2)
    assert again.root == expr.root


@given(
    _smooth_sources,
    st.lists(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False), min_size=4, max_size=4),
)
@settings(max_examples=50, deadline=None, derandomize=True)
def test_dual_derivatives_match_finite_differences(source: str, point: list[float]):
    expr = parse(source, 2)
    field = ScalarField(2, lambda x, y: expr.evaluate_xy(x, y), source)
    x, y = point[:2], point[2:]
    jet_value = jet_eval(field, x, y, OrderMask(1, 2)).value
    assert jet_value == pytest.approx(expr.evaluate_xy(x, y))
    assert fd_check(field, x, y, OrderMask(1, 2)).max_relative <= TOLERANCE_DEFAULTS["fd"]
