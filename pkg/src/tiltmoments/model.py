"""Tail density models p(x) = exp(-(g(x) - q(x))) on [domain_low, inf)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expression import (
    Const,
    DomainError,
    Expression,
    Log,
    Mul,
    Pow,
    Sub,
    Exp,
    X,
    evaluate,
    is_constant,
    parse_expression,
    to_source,
)
from .jets import eval_jet

__all__ = [
    "TailModel",
    "ValidationCheck",
    "ValidationReport",
    "builtin_model",
    "model_from_strings",
    "validate_model",
    "validation_grid",
    "BUILTIN_MODELS",
]

BUILTIN_MODELS = ("weibull", "expexp")


@dataclass(frozen=True)
class TailModel:
    g: Expression
    q: Expression = Const(0.0)
    domain_low: float = 0.0
    is_normalized: bool = False
    label: str = ""

    def __post_init__(self):
        if not self.domain_low >= 0.0:
            raise ValueError("domain_low must be >= 0")

    @property
    def q_is_constant(self) -> bool:
        return is_constant(self.q)

    def g_derivatives(self, x):
        """(g, g', g'', g''', g'''') at ``x``; x may be an array."""
        return eval_jet(self.g, x).derivatives

    def h_derivatives(self, x):
        """(h, h', h'', h''') with h = g'."""
        return self.g_derivatives(x)[1:]

    def h(self, x):
        return eval_jet(self.g, x).derivative(1)

    def g_value(self, x):
        return evaluate(self.g, x)

    def q_value(self, x):
        return evaluate(self.q, x)

    def log_density(self, x):
        return evaluate(self.q, x) - evaluate(self.g, x)

    def with_q_shift(self, c: float) -> "TailModel":
        """Same g, q replaced by q + c (the density is rescaled by e^c)."""
        from .expression import Add

        return TailModel(self.g, Add(self.q, Const(float(c))), self.domain_low, False,
                         f"{self.label}+q{c:g}")

    def to_dict(self) -> dict:
        return {
            "g": to_source(self.g),
            "q": to_source(self.q),
            "domain_low": self.domain_low,
            "is_normalized": self.is_normalized,
            "label": self.label,
        }


def model_from_strings(g: str, q: str = "0", domain_low: float = 0.0, label: str = "") -> TailModel:
    return TailModel(parse_expression(g), parse_expression(q), float(domain_low), False,
                     label or f"g={g}")


def _weibull(k: float) -> TailModel:
    if not k > 1.0:
        raise ValueError(f"weibull requires shape k > 1, got {k}")
    # g = x^k - (k-1) log x, q = log k:  p = k x^(k-1) exp(-x^k)
    g = Sub(Pow(X, k), Mul(Const(k - 1.0), Log(X)))
    return TailModel(g, Log(Const(k)), 0.0, True, f"weibull(k={k:g})")


def _expexp_normalizer() -> float:
    # Local import: the oracle depends on this module.
    from .oracle import log_phi

    raw = TailModel(Exp(Sub(X, Const(1.0))), Const(0.0), 0.0, False, "expexp-raw")
    return -log_phi(raw, 0.0, tol=1e-13)


_EXPEXP_LOGC: list[float] = []


def _expexp() -> TailModel:
    if not _EXPEXP_LOGC:
        _EXPEXP_LOGC.append(_expexp_normalizer())
    g = Exp(Sub(X, Const(1.0)))
    return TailModel(g, Const(_EXPEXP_LOGC[0]), 0.0, True, "expexp")


def builtin_model(name: str, params=()) -> TailModel:
    """Builtin models: ``weibull`` (params [k], k > 1) and ``expexp`` (no params)."""
    params = list(params or [])
    if name == "weibull":
        if len(params) != 1:
            raise ValueError("weibull takes exactly one parameter k")
        return _weibull(float(params[0]))
    if name == "expexp":
        if params:
            raise ValueError("expexp takes no parameters")
        return _expexp()
    raise ValueError(f"unknown builtin model {name!r}; choose from {BUILTIN_MODELS}")


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    witness: float | None = None  # grid point where the check failed
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ValidationCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "witness": c.witness, "detail": c.detail}
                for c in self.checks
            ],
        }


def validation_grid(model: TailModel, n: int = 256, upper: float = 1e6) -> np.ndarray:
    lo = max(model.domain_low, 1e-3) * 1.001
    return np.geomspace(lo, upper, n)


def _finite_prefix(*arrays):
    ok = np.ones(arrays[0].shape, dtype=bool)
    for a in arrays:
        ok &= np.isfinite(a)
    if ok.all():
        return len(ok)
    return int(np.argmin(ok))


def validate_model(model: TailModel, n: int = 256) -> ValidationReport:
    """Grid verdicts for convexity, superlinear growth and bounded q.

    These are heuristics: the hypotheses are statements about x -> inf and a
    finite grid can only fail to refute them.  Overflowing samples (e.g. g
    growing like exp(exp(x))) end the grid early.
    """
    xs = validation_grid(model, n)
    checks = []
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            jet = eval_jet(model.g, xs)
            g, h = jet.derivative(0), jet.derivative(1)
            q = np.broadcast_to(np.asarray(model.q_value(xs), dtype=float), xs.shape)
    except DomainError as exc:
        return ValidationReport((ValidationCheck("evaluable", False, None, str(exc)),))
    stop = _finite_prefix(g, h)
    if stop < 8:
        return ValidationReport((ValidationCheck("evaluable", False, float(xs[stop]),
                                                 "g or h not finite on the grid"),))
    xs, g, h, q = xs[:stop], g[:stop], h[:stop], q[:stop]

    dh = np.diff(h)
    bad = np.nonzero(dh < -1e-12 * np.maximum(np.abs(h[:-1]), 1.0))[0]
    checks.append(ValidationCheck(
        "convex", bad.size == 0, float(xs[bad[0] + 1]) if bad.size else None,
        "h = g' nondecreasing on the grid"))

    ratio = g / xs
    # upper half of the grid, or of the finite part when g overflows early
    start = len(ratio) // 2
    if len(ratio) < n:
        start = max(int(np.searchsorted(xs, 10.0)), start) if xs[-1] > 100.0 else start
        start = min(start, len(ratio) - 8)
    tail = ratio[start:]
    inc = np.diff(tail)
    bad = np.nonzero(inc <= 0)[0]
    # slow divergence such as x^0.1 never grows 10x on the grid, but keeps a
    # log-log slope bounded away from zero; a finite limit drives it to zero
    txs = xs[start:]
    last = txs >= txs[-1] / 10.0
    slope = 0.0
    if np.all(tail[last] > 0) and np.count_nonzero(last) > 1:
        lx, lr = np.log(txs[last]), np.log(tail[last])
        slope = float((lr[-1] - lr[0]) / (lx[-1] - lx[0]))
    grows = bool(bad.size == 0 and (tail[-1] > 10.0 * max(abs(tail[0]), 1.0) or slope > 0.01))
    witness = None
    if not grows:
        witness = float(xs[start + bad[0] + 1]) if bad.size else float(xs[-1])
    checks.append(ValidationCheck(
        "superlinear", grows, witness,
        "g(x)/x increasing, and growing by > 10x over the upper half or with "
        "log-log slope > 0.01 over the last decade"))

    positive = g[len(g) // 2:] > 0
    checks.append(ValidationCheck(
        "positive", bool(positive.all()),
        None if positive.all() else float(xs[len(g) // 2 + np.argmin(positive)]),
        "g > 0 on the upper half of the grid"))

    qa = np.abs(q)
    ok = np.all(np.isfinite(qa))
    if ok:
        head = qa[: len(qa) // 2].max()
        # bounded: no sustained growth across the grid
        ok = qa[-1] <= 10.0 * max(head, 1.0) and qa.max() <= 100.0 * max(head, 1.0)
    checks.append(ValidationCheck(
        "bounded_q", bool(ok), None if ok else float(xs[int(np.argmax(qa))]),
        "sup |q| finite and not growing on the grid"))
    return ValidationReport(tuple(checks))
