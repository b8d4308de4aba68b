# -*- coding: utf-8 -*-
"""Parser, evaluator and numeric derivative."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reebpa.errors import ExprDomainError, ExprSyntaxError, UnboundVariableError
from reebpa.expr_dsl import as_expression, evaluate, num_deriv, parse


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1+2*3", 7.0),
        ("2^3^2", 512.0),
        ("(2^3)^2", 64.0),
        ("-2^2", -4.0),
        ("10/4-1", 1.5),
        ("2*pi", 2.0 * math.pi),
        ("sqrt(16) + abs(-3)", 7.0),
        ("1e-3*1000", 1.0),
        ("3 − 1", 2.0),
    ],
)
def test_precedence_and_literals(text, expected):
    assert evaluate(parse(text), {}) == pytest.approx(expected)


def test_variables_are_bound():
    e = parse("2*r^2*cos(2*th)^2")
    assert evaluate(e, {"r": 1.0, "th": 0.0}) == pytest.approx(2.0)
    assert e.free_variables() == frozenset({"r", "th"})


def test_call_shorthand():
    assert parse("x*y + t")(x=2.0, y=3.0, t=1.0) == pytest.approx(7.0)


def test_vectorized_evaluation():
    out = evaluate(parse("r^2 + 1"), {"r": np.array([0.0, 1.0, 2.0])})
    np.testing.assert_allclose(out, [1.0, 2.0, 5.0])


def test_dangling_operator_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("r +")
    assert info.value.offset == 3


def test_offsets_are_utf8_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        parse("θ + é")
    # "θ" is two bytes wide and is not a valid identifier
    assert info.value.offset == 0
    with pytest.raises(ExprSyntaxError) as info:
        parse("r + é")
    assert info.value.offset == 4


@pytest.mark.parametrize("text", ["(1+2", "1+2)", "sin 2", "foo(1)", "1 2", "", "*3"])
def test_syntax_errors(text):
    with pytest.raises(ExprSyntaxError):
        parse(text)


def test_unbound_variable():
    with pytest.raises(UnboundVariableError) as info:
        evaluate(parse("x + y"), {"x": 1.0})
    assert info.value.name == "y"


@pytest.mark.parametrize("text", ["1/0", "sqrt(-1)", "(-8)^(1/3)", "0^(-1)"])
def test_domain_errors(text):
    with pytest.raises(ExprDomainError):
        evaluate(parse(text), {})


def test_domain_error_on_any_array_element():
    with pytest.raises(ExprDomainError):
        evaluate(parse("1/r"), {"r": np.array([1.0, 0.0])})


def test_as_expression_accepts_numbers():
    assert evaluate(as_expression(2.5), {}) == 2.5
    with pytest.raises(TypeError):
        as_expression(True)


def test_num_deriv_matches_cos():
    d = num_deriv(parse("sin(x)"), "x", {"x": 0.3})
    assert d == pytest.approx(math.cos(0.3), abs=1e-9)


def test_num_deriv_rejects_bad_step():
    with pytest.raises(ValueError):
        num_deriv(parse("x"), "x", {"x": 0.0}, h=0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(1, 1000))
def test_integer_arithmetic(a, b, c):
    assert evaluate(parse(f"{a} + {b}*{c}"), {}) == a + b * c
    assert evaluate(parse(f"{a} - {b} - {c}"), {}) == a - b - c


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_printed_tree_reparses_to_same_value(x, y):
    e = parse("-x^2 + 3*y/(1 + x^2) - sin(x*y)")
    again = parse(e.to_text())
    assert evaluate(again, {"x": x, "y": y}) == pytest.approx(evaluate(e, {"x": x, "y": y}))
