"""Jets, centred increments and the quadrature engine."""

import math

import mpmath
import numpy as np
import pytest

from tiltmoments.centered import expm1mx, increments, log1pmx, powm1mx
from tiltmoments.expression import evaluate, parse_expression
from tiltmoments.jets import Jet4, eval_jet
from tiltmoments.quadrature import QuadratureError, integrate

EXPRS = [
    "x^2",
    "x^2 - log(x)",
    "exp(x - 1)",
    "x^3/3 + x",
    "x^1.5 - 0.5*log(x) + 2/x",
    "exp(x^2) / (1 + x)",
    "log(1 + x^2) * x^-1 + x^2.5",
]


@pytest.mark.parametrize("src", EXPRS)
@pytest.mark.parametrize("x", [0.7, 1.3, 3.0])
def test_jet_derivatives_match_mpmath(src, x):
    e = parse_expression(src)
    got = eval_jet(e, x).derivatives
    with mpmath.workdps(40):
        f = lambda s: evaluate(e, s)  # noqa: E731
        for k in range(5):
            ref = float(mpmath.diff(f, mpmath.mpf(x), k))
            assert got[k] == pytest.approx(ref, rel=1e-11, abs=1e-12)


def test_jet_works_on_arrays_and_mpmath():
    e = parse_expression("x^2.5 - log(x)")
    xs = np.array([1.0, 2.0, 5.0])
    arr = eval_jet(e, xs).derivatives
    with mpmath.workdps(30):
        mp = eval_jet(e, mpmath.mpf(2)).derivatives
    for k in range(5):
        assert float(mp[k]) == pytest.approx(arr[k][1], rel=1e-14)


def test_jet_arithmetic_identities():
    v = Jet4.variable(2.0)
    one = (v / v).derivatives
    assert one[0] == 1.0 and all(abs(d) < 1e-15 for d in one[1:])
    e = (v.log().exp() - v).derivatives
    assert all(abs(d) < 1e-14 for d in e)


@pytest.mark.parametrize("fn, ref", [
    (expm1mx, lambda z: mpmath.expm1(z) - z),
    (log1pmx, lambda z: mpmath.log1p(z) - z),
    (lambda r: powm1mx(r, -1.0), lambda r: (1 + r) ** -1 - 1 + r),
    (lambda r: powm1mx(r, -2.0), lambda r: (1 + r) ** -2 - 1 + 2 * r),
    (lambda r: powm1mx(r, 0.5), lambda r: mpmath.sqrt(1 + r) - 1 - r / 2),
    (lambda r: powm1mx(r, 3.0), lambda r: (1 + r) ** 3 - 1 - 3 * r),
])
def test_second_order_remainders_are_accurate(fn, ref):
    zs = np.array([-0.3, -1e-3, -1e-9, 0.0, 1e-12, 1e-5, 0.2, 0.6])
    got = fn(zs)
    with mpmath.workdps(50):
        for z, g in zip(zs, got):
            r = float(ref(mpmath.mpf(z)))
            assert g == pytest.approx(r, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("src", EXPRS)
def test_increments_match_high_precision(src):
    e = parse_expression(src)
    a = 2.0
    u = np.array([-0.5, -1e-4, -1e-10, 0.0, 1e-8, 0.01, 0.9])
    inc = increments(e, a, u)
    with mpmath.workdps(50):
        f = lambda s: evaluate(e, s)  # noqa: E731
        fa = f(mpmath.mpf(a))
        dfa = mpmath.diff(f, mpmath.mpf(a))
        for i, ui in enumerate(u):
            ui = mpmath.mpf(ui)
            d1 = f(a + ui) - fa
            d2 = d1 - dfa * ui
            assert inc.d1[i] == pytest.approx(float(d1), rel=1e-12, abs=1e-300)
            assert inc.d2[i] == pytest.approx(float(d2), rel=1e-9, abs=1e-300)
    assert inc.value == pytest.approx(float(fa), rel=1e-15)


def test_quadrature_is_exact_for_polynomials():
    # G7K15: the Kronrod rule integrates degree <= 22 exactly
    res = integrate(lambda x: np.vstack([x**k for k in range(12)]), [-1.0, 0.3, 2.0])
    for k in range(12):
        exact = (2.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1)
        assert res.value[k] == pytest.approx(exact, rel=1e-14)
    assert res.segments_used == 2


def test_quadrature_adapts_to_peaks_and_reports_pieces():
    f = lambda x: np.exp(-((x - 0.3) ** 2) * 1e4)[None, :]  # noqa: E731
    res = integrate(f, [-5.0, 0.0, 5.0], rtol=1e-12, return_pieces=True)
    total = math.sqrt(math.pi) / 100
    assert res.value[0] == pytest.approx(total, rel=1e-11)
    assert res.pieces[0].sum() == pytest.approx(total, rel=1e-12)
    assert res.pieces[0][0] == pytest.approx(total * math.erfc(30.0) / 2, rel=1e-6, abs=1e-300)


def test_quadrature_is_deterministic():
    f = lambda x: np.vstack([np.sin(20 * x) ** 2, np.exp(-x)])  # noqa: E731
    r1 = integrate(f, np.linspace(0, 3, 4), rtol=1e-13)
    r2 = integrate(f, np.linspace(0, 3, 4), rtol=1e-13)
    assert np.array_equal(r1.value, r2.value)


def test_quadrature_failure_reports_error_estimate():
    f = lambda x: (1.0 / np.sqrt(np.abs(x - 1.0 / 3.0)))[None, :]  # noqa: E731
    with pytest.raises(QuadratureError) as info:
        integrate(f, [0.0, 1.0], rtol=1e-15, max_segments=40)
    assert info.value.abs_error_estimate > 0


def test_quadrature_rejects_non_finite_integrand():
    with pytest.raises(QuadratureError, match="not finite"):
        integrate(lambda x: np.full((1, x.size), np.nan), [0.0, 1.0])


def test_quadrature_rejects_bad_breakpoints():
    with pytest.raises(ValueError):
        integrate(lambda x: x[None, :], [1.0, 1.0])
