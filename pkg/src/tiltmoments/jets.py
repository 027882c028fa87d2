"""Fourth-order truncated Taylor arithmetic over expression trees.

A jet carries the normalised Taylor coefficients ``c[k] = f^(k)(x0) / k!`` for
k = 0..4.  Coefficients may be floats, numpy arrays (one jet per grid point) or
mpmath numbers; all rules below are plain arithmetic on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

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
    _check_nonzero,
    _check_positive,
    _exp,
    _log,
    _is_mp,
    power,
)

ORDER = 4
_FACT = [math.factorial(k) for k in range(ORDER + 1)]


@dataclass(frozen=True)
class Jet4:
    """Value and first four derivatives of a function at a point."""

    coeffs: tuple

    @classmethod
    def variable(cls, x):
        one = 1.0 if not _is_mp(x) else type(x)(1)
        zero = 0.0 * x
        return cls((x, one + zero, zero, zero, zero))

    @classmethod
    def constant(cls, v, like):
        zero = 0.0 * like
        return cls((v + zero, zero, zero, zero, zero))

    @property
    def value(self):
        return self.coeffs[0]

    def derivative(self, k: int):
        return self.coeffs[k] * _FACT[k]

    @property
    def derivatives(self) -> tuple:
        """(f, f', f'', f''', f'''')."""
        return tuple(self.derivative(k) for k in range(ORDER + 1))

    def __add__(self, other: "Jet4") -> "Jet4":
        return Jet4(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "Jet4") -> "Jet4":
        return Jet4(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __mul__(self, other: "Jet4") -> "Jet4":
        a, b = self.coeffs, other.coeffs
        return Jet4(tuple(sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(ORDER + 1)))

    def __truediv__(self, other: "Jet4") -> "Jet4":
        a, b = self.coeffs, other.coeffs
        _check_nonzero(b[0])
        c = []
        for k in range(ORDER + 1):
            acc = a[k]
            for j in range(1, k + 1):
                acc = acc - b[j] * c[k - j]
            c.append(acc / b[0])
        return Jet4(tuple(c))

    def exp(self) -> "Jet4":
        a = self.coeffs
        b = [_exp(a[0])]
        for k in range(1, ORDER + 1):
            b.append(sum(j * a[j] * b[k - j] for j in range(1, k + 1)) / k)
        return Jet4(tuple(b))

    def log(self) -> "Jet4":
        a = self.coeffs
        _check_positive(a[0], "log")
        b = [_log(a[0])]
        for k in range(1, ORDER + 1):
            acc = a[k] - sum(j * b[j] * a[k - j] for j in range(1, k)) / k
            b.append(acc / a[0])
        return Jet4(tuple(b))

    def __pow__(self, p: float) -> "Jet4":
        if float(p).is_integer():
            k = int(p)
            if k == 0:
                return Jet4.constant(1.0, self.coeffs[0])
            base = self if k > 0 else Jet4.constant(1.0, self.coeffs[0]) / self
            out = None
            k = abs(k)
            while k:
                if k & 1:
                    out = base if out is None else out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        a = self.coeffs
        _check_positive(a[0], "non-integer power")
        b = [power(a[0], p)]
        for k in range(1, ORDER + 1):
            acc = sum(((p + 1) * j - k) * a[j] * b[k - j] for j in range(1, k + 1))
            b.append(acc / (k * a[0]))
        return Jet4(tuple(b))


def eval_jet(expr: Expression, x) -> Jet4:
    """Value and derivatives 1..4 of ``expr`` at ``x`` (scalar or array)."""
    xj = Jet4.variable(x)
    return _jet(expr, xj, x)


def _jet(expr: Expression, xj: Jet4, x) -> Jet4:
    match expr:
        case Const(value):
            return Jet4.constant(type(x)(value) if _is_mp(x) else value, x)
        case Var():
            return xj
        case Add(a, b):
            return _jet(a, xj, x) + _jet(b, xj, x)
        case Sub(a, b):
            return _jet(a, xj, x) - _jet(b, xj, x)
        case Mul(a, b):
            return _jet(a, xj, x) * _jet(b, xj, x)
        case Div(a, b):
            return _jet(a, xj, x) / _jet(b, xj, x)
        case Pow(b, p):
            return _jet(b, xj, x) ** p
        case Exp(a):
            return _jet(a, xj, x).exp()
        case Log(a):
            return _jet(a, xj, x).log()
    raise TypeError(f"not an expression node: {expr!r}")


__all__ = ["Jet4", "eval_jet", "DomainError"]
