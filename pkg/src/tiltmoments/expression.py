"""Single-variable expression trees: parsing, printing and evaluation.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' number)?
    base   := number | 'x' | '(' expr ')' | ('exp' | 'log') '(' expr ')'

Exponents may carry a leading minus sign (``x^-5``); numbers accept an
optional decimal exponent (``1e-3``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Exp",
    "Log",
    "ExpressionSyntaxError",
    "DomainError",
    "parse_expression",
    "to_source",
    "evaluate",
    "is_constant",
]


class ExpressionSyntaxError(ValueError):
    """Raised on malformed source; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class DomainError(ValueError):
    """Evaluation left the domain of an operation (log of non-positive, 1/0, ...)."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Add:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Sub:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Mul:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Div:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: float


@dataclass(frozen=True)
class Exp:
    arg: "Expression"


@dataclass(frozen=True)
class Log:
    arg: "Expression"


Expression = Union[Const, Var, Add, Sub, Mul, Div, Pow, Exp, Log]

X = Var()


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)

_FUNCTIONS = {"exp": Exp, "log": Log}


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", pos, self.source)

    def error(self, message: str):
        raise ExpressionSyntaxError(message, self.peek()[2], self.source)

    def parse(self) -> Expression:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {text!r}", pos, self.source)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expression:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self) -> Expression:
        node = self.base()
        if self.peek()[1] == "^":
            self.take()
            sign = 1.0
            if self.peek()[1] in ("-", "+") and self.peek()[0] == "op":
                sign = -1.0 if self.take()[1] == "-" else 1.0
            kind, text, pos = self.take()
            if kind != "number":
                raise ExpressionSyntaxError("exponent must be a number", pos, self.source)
            node = Pow(node, sign * float(text))
        return node

    def base(self) -> Expression:
        kind, text, pos = self.peek()
        if kind == "number":
            self.take()
            return Const(float(text))
        if kind == "name":
            self.take()
            if text == "x":
                return X
            if text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCTIONS[text](arg)
            raise ExpressionSyntaxError(f"unknown identifier {text!r}", pos, self.source)
        if text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected token {text!r}")


def parse_expression(source: str) -> Expression:
    """Parse ``source`` into an expression tree."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# printing

def _num(v: float) -> str:
    if v < 0 or math.copysign(1.0, v) < 0:
        return f"(0 - {_num(-v)})"
    return repr(float(v))


def to_source(expr: Expression) -> str:
    """Render ``expr`` back into the grammar; fully parenthesised, lossless."""
    match expr:
        case Const(value):
            return _num(value)
        case Var():
            return "x"
        case Add(a, b):
            return f"({to_source(a)} + {to_source(b)})"
        case Sub(a, b):
            return f"({to_source(a)} - {to_source(b)})"
        case Mul(a, b):
            return f"({to_source(a)} * {to_source(b)})"
        case Div(a, b):
            return f"({to_source(a)} / {to_source(b)})"
        case Pow(b, p):
            return f"({to_source(b)})^{float(p)!r}"
        case Exp(a):
            return f"exp({to_source(a)})"
        case Log(a):
            return f"log({to_source(a)})"
    raise TypeError(f"not an expression node: {expr!r}")


def is_constant(expr: Expression) -> bool:
    """True when ``expr`` does not depend on x."""
    match expr:
        case Const():
            return True
        case Var():
            return False
        case Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b):
            return is_constant(a) and is_constant(b)
        case Pow(b, _) | Exp(b) | Log(b):
            return is_constant(b)
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# plain evaluation (floats, numpy arrays, or mpmath numbers)

def _is_mp(v) -> bool:
    return type(v).__module__.startswith("mpmath")


def _check_positive(v, what: str):
    if np.any(np.asarray(v <= 0)) if not _is_mp(v) else v <= 0:
        raise DomainError(f"{what} of non-positive value")


def _check_nonzero(v):
    if np.any(np.asarray(v == 0)) if not _is_mp(v) else v == 0:
        raise DomainError("division by zero")


def _exp(v):
    if _is_mp(v):
        import mpmath

        return mpmath.exp(v)
    with np.errstate(over="ignore"):
        return np.exp(v)


def _log(v):
    if _is_mp(v):
        import mpmath

        return mpmath.log(v)
    return np.log(v)


def power(v, p: float):
    """v**p with the domain rules of the expression language."""
    if float(p).is_integer():
        k = int(p)
        if k < 0:
            _check_nonzero(v)
        if k >= 0:
            out = 1.0 if np.ndim(v) == 0 else np.ones_like(v)
            base = v
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        return 1.0 / power(v, -k)
    _check_positive(v, "non-integer power")
    if _is_mp(v):
        return v**p
    with np.errstate(over="ignore"):
        return np.power(v, p)


def evaluate(expr: Expression, x):
    """Evaluate ``expr`` at ``x`` (scalar, ndarray, or mpmath number).

    Raises DomainError instead of returning NaN.
    """
    match expr:
        case Const(value):
            if np.ndim(x) and not _is_mp(x):
                return np.full(np.shape(x), value)
            return type(x)(value) if _is_mp(x) else value
        case Var():
            return x
        case Add(a, b):
            return evaluate(a, x) + evaluate(b, x)
        case Sub(a, b):
            return evaluate(a, x) - evaluate(b, x)
        case Mul(a, b):
            return evaluate(a, x) * evaluate(b, x)
        case Div(a, b):
            den = evaluate(b, x)
            _check_nonzero(den)
            return evaluate(a, x) / den
        case Pow(b, p):
            return power(evaluate(b, x), p)
        case Exp(a):
            return _exp(evaluate(a, x))
        case Log(a):
            v = evaluate(a, x)
            _check_positive(v, "log")
            return _log(v)
    raise TypeError(f"not an expression node: {expr!r}")
