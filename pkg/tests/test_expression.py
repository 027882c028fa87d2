import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltmoments.expression import (
    Add,
    Const,
    Div,
    DomainError,
    Exp,
    ExpressionSyntaxError,
    Log,
    Mul,
    Pow,
    Sub,
    X,
    evaluate,
    is_constant,
    parse_expression,
    to_source,
)


def test_precedence_and_associativity():
    e = parse_expression("1 + 2 * x ^ 2 - x / 4")
    assert e == Sub(Add(Const(1.0), Mul(Const(2.0), Pow(X, 2.0))), Div(X, Const(4.0)))
    assert evaluate(e, 3.0) == pytest.approx(1 + 18 - 0.75)


def test_left_associative_subtraction_and_division():
    assert evaluate(parse_expression("10 - 4 - 3"), 0.0) == 3.0
    assert evaluate(parse_expression("x / 2 / 5"), 20.0) == 2.0


def test_functions_and_whitespace():
    e = parse_expression("  exp( x - 1 )+log(x)")
    assert e == Add(Exp(Sub(X, Const(1.0))), Log(X))
    assert evaluate(e, 1.0) == pytest.approx(1.0)


def test_signed_and_scientific_exponents():
    assert parse_expression("x^-5") == Pow(X, -5.0)
    assert parse_expression("x^1.5e0") == Pow(X, 1.5)
    assert evaluate(parse_expression("2.5e-1 * x"), 4.0) == 1.0


@pytest.mark.parametrize("src, pos", [
    ("x +", 3),
    ("(x", 2),
    ("x $ 2", 2),
    ("sin(x)", 0),
    ("x ^ x", 4),
    ("x 2", 2),
    ("", 0),
])
def test_syntax_errors_carry_position(src, pos):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression(src)
    assert info.value.position == pos
    assert f"position {pos}" in str(info.value)


def test_domain_errors_are_raised_not_nan():
    with pytest.raises(DomainError):
        evaluate(parse_expression("log(x)"), 0.0)
    with pytest.raises(DomainError):
        evaluate(parse_expression("1 / x"), np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        evaluate(parse_expression("x^0.5"), -1.0)


def test_integer_powers_of_negative_values_are_fine():
    assert evaluate(parse_expression("x^3"), -2.0) == -8.0
    assert evaluate(parse_expression("x^-2"), -2.0) == 0.25


def test_array_and_mpmath_evaluation_agree():
    e = parse_expression("x^2.5 - 1.5*log(x) + exp(x/10)")
    xs = np.array([0.5, 1.0, 7.0])
    arr = evaluate(e, xs)
    for x, v in zip(xs, arr):
        with mpmath.workdps(30):
            assert float(evaluate(e, mpmath.mpf(x))) == pytest.approx(v, rel=1e-14)


def test_constant_broadcasts_to_array_shape():
    assert evaluate(Const(3.0), np.zeros(4)).shape == (4,)


def test_is_constant():
    assert is_constant(parse_expression("log(2) + 3^2"))
    assert not is_constant(parse_expression("log(x) * 0"))


def test_negative_constant_prints_in_grammar():
    src = to_source(Const(-2.5))
    assert evaluate(parse_expression(src), 0.0) == -2.5


# ---------------------------------------------------------------------------
# property: printing then parsing is the identity on trees

consts = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Const)
exponents = st.floats(min_value=-6, max_value=6, allow_nan=False).filter(lambda p: p != 0)


def _trees(children):
    return st.one_of(
        st.builds(Add, children, children),
        st.builds(Sub, children, children),
        st.builds(Mul, children, children),
        st.builds(Div, children, children),
        st.builds(Pow, children, exponents),
        st.builds(Exp, children),
        st.builds(Log, children),
    )


trees = st.recursive(st.one_of(consts, st.just(X)), _trees, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_print_parse_roundtrip(tree):
    assert parse_expression(to_source(tree)) == tree


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=-1e300, max_value=1e300, allow_nan=False))
def test_constant_roundtrip_is_bit_exact(v):
    back = evaluate(parse_expression(to_source(Const(v))), 0.0)
    assert back == v
