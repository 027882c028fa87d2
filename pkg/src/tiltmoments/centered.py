"""Accurate increments of an expression around a base point.

For a base point ``a`` and offsets ``u`` this evaluates, without forming the
large values ``f(a + u)`` and ``f(a)`` separately,

    d1(u) = f(a + u) - f(a)
    d2(u) = f(a + u) - f(a) - f'(a) u

Tilted weights need ``K(x, t) - K(x_hat, t)`` to a few ulps of its own size even
when ``g(x_hat)`` is many orders of magnitude larger; subtracting two direct
evaluations loses all of that.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .expression import (
    Add,
    Const,
    Div,
    DomainError,
    Exp,
    Expression,
    Log,
    Mul,
    Pow,
    Sub,
    Var,
)


class Increment(NamedTuple):
    value: float  # f(a)
    slope: float  # f'(a)
    d1: np.ndarray  # f(a+u) - f(a)
    d2: np.ndarray  # f(a+u) - f(a) - f'(a) u


_EXPM1MX_TERMS = 1.0 / np.array([float(np.prod(np.arange(1, k + 1))) for k in range(2, 22)])


def expm1mx(z):
    """exp(z) - 1 - z without cancellation near 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 0.5
    zs = z[small]
    acc = np.zeros_like(zs)
    for c in _EXPM1MX_TERMS[::-1]:
        acc = acc * zs + c
    out[small] = acc * zs * zs
    zb = z[~small]
    with np.errstate(over="ignore"):
        out[~small] = np.expm1(zb) - zb
    return out


def log1pmx(r):
    """log(1 + r) - r without cancellation near 0."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = np.abs(r) < 0.25
    rs = r[small]
    acc = np.zeros_like(rs)
    for k in range(40, 1, -1):
        acc = acc * rs + (1.0 if k % 2 else -1.0) / k
    out[small] = acc * rs * rs
    rb = r[~small]
    out[~small] = np.log1p(rb) - rb
    return out


def _pow1p(r, p: float):
    """(1 + r)^p - 1."""
    r = np.asarray(r, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if float(p).is_integer():
            pos = r > -1.0
            out = np.empty_like(r)
            out[pos] = np.expm1(p * np.log1p(r[pos]))
            out[~pos] = np.power(1.0 + r[~pos], p) - 1.0
            return out
        return np.expm1(p * np.log1p(r))


def _binomial_coefficients(p: float, n: int) -> list[float]:
    """Generalised binomial coefficients C(p, k) for k = 0..n (any real p)."""
    out = [1.0]
    for k in range(1, n + 1):
        out.append(out[-1] * (p - k + 1) / k)
    return out


def powm1mx(r, p: float):
    """(1 + r)^p - 1 - p r without cancellation near 0."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = (np.abs(r) < 0.25) & (np.abs(p * r) < 0.5)
    rs = r[small]
    acc = np.zeros_like(rs)
    for c in reversed(_binomial_coefficients(p, 60)[2:]):
        acc = acc * rs + c
    out[small] = acc * rs * rs
    rb = r[~small]
    out[~small] = _pow1p(rb, p) - p * rb
    return out


def increments(expr: Expression, a: float, u) -> Increment:
    """Evaluate the increments of ``expr`` at ``a + u`` relative to ``a``."""
    u = np.asarray(u, dtype=float)
    return _inc(expr, float(a), u)


def _const(c: float, u) -> Increment:
    z = np.zeros_like(u)
    return Increment(c, 0.0, z, z)


def _mul(f: Increment, g: Increment) -> Increment:
    cross = f.d1 * g.d1
    return Increment(
        f.value * g.value,
        f.slope * g.value + f.value * g.slope,
        f.value * g.d1 + g.value * f.d1 + cross,
        f.value * g.d2 + g.value * f.d2 + cross,
    )


def _pow(f: Increment, p: float) -> Increment:
    if float(p).is_integer() and p >= 0:
        k = int(p)
        out = None
        base = f
        while k:
            if k & 1:
                out = base if out is None else _mul(out, base)
            k >>= 1
            if k:
                base = _mul(base, base)
        return out if out is not None else _const(1.0, f.d1)
    F = f.value
    if F == 0.0:
        raise DomainError("negative power of zero")
    if not float(p).is_integer():
        if F <= 0.0 or np.any(F + f.d1 <= 0.0):
            raise DomainError("non-integer power of non-positive value")
    elif np.any(F + f.d1 == 0.0):
        raise DomainError("division by zero")
    Fp = F**p
    r = f.d1 / F
    return Increment(
        Fp,
        p * F ** (p - 1) * f.slope,
        Fp * _pow1p(r, p),
        Fp * powm1mx(r, p) + p * F ** (p - 1) * f.d2,
    )


def _inc(expr: Expression, a: float, u) -> Increment:
    match expr:
        case Const(value):
            return _const(value, u)
        case Var():
            return Increment(a, 1.0, u, np.zeros_like(u))
        case Add(l, r):
            f, g = _inc(l, a, u), _inc(r, a, u)
            return Increment(f.value + g.value, f.slope + g.slope, f.d1 + g.d1, f.d2 + g.d2)
        case Sub(l, r):
            f, g = _inc(l, a, u), _inc(r, a, u)
            return Increment(f.value - g.value, f.slope - g.slope, f.d1 - g.d1, f.d2 - g.d2)
        case Mul(l, r):
            return _mul(_inc(l, a, u), _inc(r, a, u))
        case Div(l, r):
            return _mul(_inc(l, a, u), _pow(_inc(r, a, u), -1.0))
        case Pow(b, p):
            return _pow(_inc(b, a, u), p)
        case Exp(arg):
            f = _inc(arg, a, u)
            E = float(np.exp(f.value))
            with np.errstate(over="ignore", invalid="ignore"):
                d1 = E * np.expm1(f.d1)
                d2 = E * (expm1mx(f.d1) + f.d2)
            return Increment(E, E * f.slope, d1, d2)
        case Log(arg):
            f = _inc(arg, a, u)
            F = f.value
            if F <= 0.0 or np.any(F + f.d1 <= 0.0):
                raise DomainError("log of non-positive value")
            r = f.d1 / F
            return Increment(float(np.log(F)), f.slope / F, np.log1p(r), log1pmx(r) + f.d2 / F)
    raise TypeError(f"not an expression node: {expr!r}")
