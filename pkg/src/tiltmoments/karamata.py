"""Regular vs rapid variation of h = g' and the trend tests behind it.

Asymptotic hypotheses (o(1), O(1), index bounds) are turned into verdicts on
finite geometric grids.  Those verdicts are evidence, not proofs: a grid can
refute a trend it sees but never establish a limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .model import TailModel
from .tilt import InversionError, invert_h

__all__ = [
    "Verdict",
    "Kind",
    "TrendRecord",
    "RVIndex",
    "VariationClass",
    "KaramataConfig",
    "NOISE_FLOOR",
    "trend_verdict",
    "estimate_rv_index",
    "epsilon_x",
    "epsilon_t",
    "check_case1_conditions",
    "check_case2_conditions",
    "check_q_conditions",
    "classify",
    "check_lemma_2_3",
    "check_corollaries",
    "check_luc",
    "feasible_t_grid",
]


class Verdict(str, Enum):
    CONVERGES_TO_ZERO = "ConvergesToZero"
    BOUNDED = "Bounded"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"
    ALWAYS_PASS = "AlwaysPass"


class Kind(str, Enum):
    REGULARLY_VARYING = "RegularlyVarying"
    RAPIDLY_VARYING = "RapidlyVarying"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class KaramataConfig:
    points_per_decade: int = 64
    x_low: float = 10.0
    x_high: float = 1e6
    trend_epsilon: float = 1e-2
    slope_cap: float = 8.0
    slope_growth: float = 0.25
    theta_tol: float = 0.05
    # slowly varying epsilon(t) needs a very long t range to drop below
    # trend_epsilon; psi is cheap, so the case-2 grid runs far out
    t2_low: float = 10.0
    t2_high: float = 1e60
    t2_points_per_decade: int = 8
    identity_tol: float = 1e-6


DEFAULT_CONFIG = KaramataConfig()


@dataclass(frozen=True)
class TrendRecord:
    label: str
    grid: tuple  # ((x, value), ...)
    verdict: Verdict
    tail_ratio: float
    passed: bool
    estimate: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "grid": [[float(a), float(b)] for a, b in self.grid],
            "verdict": self.verdict.value,
            "tail_ratio": self.tail_ratio,
            "passed": self.passed,
            "estimate": self.estimate,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrendRecord":
        return cls(d["label"], tuple((a, b) for a, b in d["grid"]), Verdict(d["verdict"]),
                   d["tail_ratio"], d["passed"], d.get("estimate"), d.get("note", ""))


NOISE_FLOOR = 1e-12


def trend_verdict(values, eps: float = DEFAULT_CONFIG.trend_epsilon, floor: float = NOISE_FLOOR,
                  noise: float = 1e-9) -> tuple[Verdict, float]:
    """Classify the tail behaviour of a sampled sequence.

    ConvergesToZero needs |v| nonincreasing over the last half (up to a relative
    ``noise``) and a final |v| below ``eps``.  Magnitudes below ``floor`` are
    treated as equal to ``floor``: rounding noise by default, or the
    propagated error of a fitted index.
    """
    v = np.abs(np.asarray(values, dtype=float))
    if v.size < 4 or not np.all(np.isfinite(v)):
        return Verdict.INCONCLUSIVE, float("nan")
    v = np.maximum(v, floor)
    vmax = float(v.max())
    tail_ratio = float(v[-1] / vmax) if vmax > 0 else 0.0
    half = v[v.size // 2:]
    head = v[: v.size // 2]
    slack = noise * float(half.max()) + 1e-300
    if np.all(np.diff(half) <= slack) and v[-1] < eps:
        return Verdict.CONVERGES_TO_ZERO, tail_ratio
    rising = np.mean(np.diff(half) > 0) > 0.9
    if rising and v[-1] > 10.0 * max(float(head.max()), 1e-300):
        return Verdict.DIVERGES, tail_ratio
    return Verdict.BOUNDED, tail_ratio


def _record(label, xs, vals, need: str, eps, floor=0.0, estimate=None, note="") -> TrendRecord:
    floor = max(floor, NOISE_FLOOR)
    verdict, ratio = trend_verdict(vals, eps, floor)
    if need == "zero":
        passed = verdict == Verdict.CONVERGES_TO_ZERO
    else:  # bounded
        passed = verdict in (Verdict.CONVERGES_TO_ZERO, Verdict.BOUNDED)
    grid = tuple((float(a), float(b)) for a, b in zip(xs, vals))
    return TrendRecord(label, grid, verdict, ratio, passed, estimate, note)


def _x_grid(cfg: KaramataConfig) -> np.ndarray:
    decades = math.log10(cfg.x_high / cfg.x_low)
    n = int(round(decades * cfg.points_per_decade)) + 1
    return np.geomspace(cfg.x_low, cfg.x_high, n)


def feasible_t_grid(model: TailModel, low: float, high: float, per_decade: int) -> np.ndarray:
    """Geometric t-grid, cut where inverting h would leave the supported x range."""
    decades = int(math.ceil(math.log10(high / low)))
    out = []
    for d in range(decades):
        a = low * 10.0**d
        b = min(a * 10.0, high)
        ts = np.geomspace(a, b, per_decade + 1)[:-1] if b < high else np.geomspace(a, b, per_decade + 1)
        try:
            invert_h(model, ts)
        except InversionError:
            break
        out.append(ts)
    return np.concatenate(out) if out else np.array([])


# ---------------------------------------------------------------------------
# finite differences

def _d1(f: Callable, x, rel: float = 1e-3):
    def D(h):
        return (f(x + h) - f(x - h)) / (2.0 * h)

    h = rel * x
    return (4.0 * D(h / 2) - D(h)) / 3.0


def _d2(f: Callable, x, rel: float = 1e-2):
    fx = f(x)

    def D(h):
        return (f(x + h) - 2.0 * fx + f(x - h)) / (h * h)

    h = rel * x
    return (4.0 * D(h / 2) - D(h)) / 3.0


# ---------------------------------------------------------------------------
# index estimation

@dataclass(frozen=True)
class RVIndex:
    beta: float
    stderr: float
    diverging: bool
    decade_slopes: tuple = ()


def _ls_slope(lx, ly):
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    dof = max(lx.size - 2, 1)
    var = float(resid @ resid) / dof / float(np.sum((lx - lx.mean()) ** 2))
    return float(coef[0]), math.sqrt(max(var, 0.0))


def estimate_rv_index(h_eval: Callable, cfg: KaramataConfig = DEFAULT_CONFIG) -> RVIndex:
    """Least-squares slope of log h against log x over [x_low, x_high].

    Flags rapid variation (``diverging``) when h overflows, a per-decade slope
    exceeds ``slope_cap``, or the slope grows by more than ``slope_growth``
    from one decade to the next.  The reported stderr combines the regression
    error with the drift between the global fit and the last decade.
    """
    xs = _x_grid(cfg)
    with np.errstate(over="ignore", invalid="ignore"):
        h = np.asarray(h_eval(xs), dtype=float) * np.ones_like(xs)
    finite = np.isfinite(h)
    if np.any(h[finite] <= 0):
        raise ValueError("h has a non-positive sample on the estimation grid")
    lx = np.log(xs)
    if not np.all(finite):
        ok = np.nonzero(~finite)[0][0]
        slopes = []
        if ok >= 4:
            slopes.append(_ls_slope(lx[:ok], np.log(h[:ok]))[0])
        return RVIndex(float("nan"), float("nan"), True, tuple(slopes))
    lh = np.log(h)
    per = cfg.points_per_decade
    slopes = []
    for start in range(0, xs.size - 1, per):
        sl = slice(start, min(start + per + 1, xs.size))
        if lx[sl].size >= 3:
            slopes.append(_ls_slope(lx[sl], lh[sl])[0])
    diverging = any(s > cfg.slope_cap for s in slopes)
    for a, b in zip(slopes, slopes[1:]):
        if a > 0 and b > (1.0 + cfg.slope_growth) * a:
            diverging = True
    if diverging:
        return RVIndex(float("nan"), float("nan"), True, tuple(slopes))
    beta, se = _ls_slope(lx, lh)
    drift = abs(slopes[-1] - beta)
    return RVIndex(beta, math.sqrt(se**2 + drift**2), False, tuple(slopes))


def epsilon_x(model: TailModel, beta: float, x):
    """x h'(x)/h(x) - beta, the slowly varying part of the Karamata form."""
    h, dh = model.h_derivatives(x)[:2]
    h = np.asarray(h, dtype=float)
    if np.any(h == 0):
        raise ZeroDivisionError("h(x) = 0")
    out = np.asarray(x) * np.asarray(dh, dtype=float) / h - beta
    return float(out) if np.ndim(out) == 0 else out


def epsilon_t(model: TailModel, t):
    """t psi'(t)/psi(t) with psi' = 1/h'(psi(t))."""
    psi = invert_h(model, t)
    dh = np.asarray(model.h_derivatives(psi)[1], dtype=float)
    out = np.asarray(t) / (dh * np.asarray(psi))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# condition checks

def check_case1_conditions(model, beta: float, cfg: KaramataConfig = DEFAULT_CONFIG,
                           beta_stderr: float = 0.0) -> list[TrendRecord]:
    """epsilon = o(1), x|eps'| = O(1), x^2|eps''| = O(1), and theta <= beta - 2."""
    xs = _x_grid(cfg)
    eps = lambda x: epsilon_x(model, beta, x)  # noqa: E731
    e0 = eps(xs)
    e1 = _d1(eps, xs)
    e2 = _d2(eps, xs)
    floor = 2.0 * beta_stderr
    recs = [
        _record("case1_epsilon", xs, e0, "zero", cfg.trend_epsilon, floor),
        _record("case1_x_deps", xs, xs * np.abs(e1), "bounded", cfg.trend_epsilon, floor),
        _record("case1_x2_d2eps", xs, xs**2 * np.abs(e2), "bounded", cfg.trend_epsilon, floor),
    ]
    h2 = np.abs(np.asarray(model.h_derivatives(xs)[2], dtype=float) * np.ones_like(xs))
    grid = tuple((float(a), float(b)) for a, b in zip(xs, h2))
    bound = beta - 2.0
    if np.all(h2 == 0):
        recs.append(TrendRecord("case1_theta", grid, Verdict.ALWAYS_PASS, 0.0, True,
                                float("-inf"), f"h'' vanishes on the grid; bound {bound:g}"))
    elif np.any(h2 == 0):
        recs.append(TrendRecord("case1_theta", grid, Verdict.INCONCLUSIVE, float("nan"), False,
                                None, "h'' has isolated zeros; index undefined"))
    else:
        upper = slice(xs.size // 2, None)
        theta, _ = _ls_slope(np.log(xs[upper]), np.log(h2[upper]))
        ok = theta <= bound + cfg.theta_tol
        verdict, ratio = trend_verdict(h2, cfg.trend_epsilon)
        recs.append(TrendRecord("case1_theta", grid, verdict, ratio, bool(ok), theta,
                                f"theta={theta:.6g}, requires <= beta-2={bound:.6g}"))
    return recs


def _eps_t_fn(model):
    def f(t):
        return epsilon_t(model, t)

    return f


def check_case2_conditions(model, cfg: KaramataConfig = DEFAULT_CONFIG,
                           ts: np.ndarray | None = None) -> list[TrendRecord]:
    """epsilon(t) = o(1), t eps'/eps -> 0 and t^2 eps''/eps -> 0."""
    if ts is None:
        ts = feasible_t_grid(model, cfg.t2_low, cfg.t2_high, cfg.t2_points_per_decade)
    if ts.size < 4 * cfg.t2_points_per_decade:
        grid = tuple((float(t), float("nan")) for t in ts)
        return [TrendRecord("case2_epsilon", grid, Verdict.INCONCLUSIVE, float("nan"), False,
                            None, "fewer than four decades of invertible t")]
    f = _eps_t_fn(model)
    e0 = f(ts)
    e1 = _d1(f, ts)
    e2 = _d2(f, ts)
    return [
        _record("case2_epsilon", ts, e0, "zero", cfg.trend_epsilon),
        _record("case2_t_deps_over_eps", ts, ts * e1 / e0, "zero", cfg.trend_epsilon),
        _record("case2_t2_d2eps_over_eps", ts, ts**2 * e2 / e0, "zero", cfg.trend_epsilon),
    ]


@dataclass(frozen=True)
class VariationClass:
    kind: Kind
    beta: float | None = None
    beta_stderr: float | None = None
    theta: float | None = None
    eta: float | None = None
    evidence: tuple = field(default_factory=tuple)
    note: str = ""

    @property
    def supported(self) -> bool:
        return self.kind != Kind.UNSUPPORTED

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "beta": self.beta,
            "beta_stderr": self.beta_stderr,
            "theta": self.theta,
            "eta": self.eta,
            "evidence": [r.to_dict() for r in self.evidence],
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VariationClass":
        return cls(Kind(d["kind"]), d.get("beta"), d.get("beta_stderr"), d.get("theta"),
                   d.get("eta"), tuple(TrendRecord.from_dict(r) for r in d.get("evidence", [])),
                   d.get("note", ""))


def check_q_conditions(model: TailModel, cls: VariationClass,
                       cfg: KaramataConfig = DEFAULT_CONFIG) -> TrendRecord:
    """Index bound on |q|: eta < theta - 3 beta/2 - 3/2 (case 1) or eta < -1/2 (case 2).

    Eventually constant q (q = 0 included) passes with verdict AlwaysPass: a
    literal index condition would exclude constants, yet constant q is the
    standard way to carry a normalising factor.
    """
    if cls.kind == Kind.REGULARLY_VARYING:
        xs = _x_grid(cfg)
        qv = np.asarray(model.q_value(xs), dtype=float) * np.ones_like(xs)
        theta = cls.theta if cls.theta is not None and np.isfinite(cls.theta) else cls.beta - 2.0
        bound = theta - 1.5 * cls.beta - 1.5
    elif cls.kind == Kind.RAPIDLY_VARYING:
        xs = feasible_t_grid(model, cfg.t2_low, cfg.t2_high, cfg.t2_points_per_decade)
        qv = np.asarray(model.q_value(invert_h(model, xs)), dtype=float) * np.ones_like(xs)
        bound = -0.5
    else:
        raise ValueError("q conditions need a regularly or rapidly varying classification")
    qa = np.abs(qv)
    grid = tuple((float(a), float(b)) for a, b in zip(xs, qv))
    if np.all(qa == 0):
        return TrendRecord("q_index", grid, Verdict.ALWAYS_PASS, 0.0, True, None, "q = 0")
    half = qa[qa.size // 2:]
    if model.q_is_constant or float(np.ptp(half)) <= 1e-12 * float(half.max()):
        note = (f"eventually constant q: eta=0 violates eta < {bound:.6g} literally; "
                "accepted as bounded slowly varying q")
        return TrendRecord("q_index", grid, Verdict.ALWAYS_PASS, 1.0, True, 0.0, note)
    if np.any(qa == 0):
        return TrendRecord("q_index", grid, Verdict.INCONCLUSIVE, float("nan"), False, None,
                           "q has zeros on the grid")
    eta, _ = _ls_slope(np.log(xs), np.log(qa))
    verdict, ratio = trend_verdict(qa, cfg.trend_epsilon)
    ok = eta < bound
    return TrendRecord("q_index", grid, verdict, ratio, bool(ok), eta,
                       f"eta={eta:.6g}, requires < {bound:.6g}")


def classify(model: TailModel, cfg: KaramataConfig = DEFAULT_CONFIG) -> VariationClass:
    """Case 1 (regularly varying h), Case 2 (rapidly varying h) or Unsupported."""
    try:
        rv = estimate_rv_index(model.h, cfg)
    except ValueError as exc:
        return VariationClass(Kind.UNSUPPORTED, note=f"index estimation failed: {exc}")
    if not rv.diverging:
        if not (rv.beta > 0.01 and rv.beta > 3.0 * rv.stderr):
            return VariationClass(Kind.UNSUPPORTED, rv.beta, rv.stderr,
                                  note="h is not regularly varying with positive index")
        recs = check_case1_conditions(model, rv.beta, cfg, rv.stderr)
        theta = next(r.estimate for r in recs if r.label == "case1_theta")
        provisional = VariationClass(Kind.REGULARLY_VARYING, rv.beta, rv.stderr, theta)
        qrec = check_q_conditions(model, provisional, cfg)
        recs.append(qrec)
        ok = all(r.passed for r in recs)
        kind = Kind.REGULARLY_VARYING if ok else Kind.UNSUPPORTED
        return VariationClass(kind, rv.beta, rv.stderr, theta, qrec.estimate, tuple(recs),
                              "" if ok else "case 1 conditions failed")
    recs = check_case2_conditions(model, cfg)
    if all(r.passed for r in recs):
        qrec = check_q_conditions(model, VariationClass(Kind.RAPIDLY_VARYING), cfg)
        recs.append(qrec)
    ok = all(r.passed for r in recs)
    kind = Kind.RAPIDLY_VARYING if ok else Kind.UNSUPPORTED
    eta = recs[-1].estimate if recs[-1].label == "q_index" else None
    return VariationClass(kind, None, None, None, eta, tuple(recs),
                          "" if ok else "case 2 conditions failed")


# ---------------------------------------------------------------------------
# identity and asymptotic-equivalence checks

def check_lemma_2_3(model: TailModel, ts: Sequence[float] | None = None,
                    cfg: KaramataConfig = DEFAULT_CONFIG) -> list[TrendRecord]:
    """h'(psi) psi' = 1, and h''(psi) psi^2 eps^2 / t -> 1, h'''(psi) psi^3 eps^3 / t -> 1."""
    rv = estimate_rv_index(model.h, cfg)
    if not rv.diverging:
        raise ValueError("Lemma checks for rapidly varying h do not apply to a regularly varying model")
    if ts is None:
        ts = feasible_t_grid(model, cfg.t2_low, cfg.t2_high, cfg.t2_points_per_decade)
    ts = np.asarray(ts, dtype=float)
    psi = invert_h(model, ts)
    _, h1, h2, h3 = (np.asarray(v, dtype=float) for v in model.h_derivatives(psi))
    dpsi_fd = _d1(lambda s: invert_h(model, s), ts)
    ident = h1 * dpsi_fd - 1.0
    eps = ts / (h1 * psi)
    r2 = h2 * psi**2 * eps**2 / ts - 1.0
    r3 = h3 * psi**3 * eps**3 / ts - 1.0
    grid = tuple((float(a), float(b)) for a, b in zip(ts, ident))
    worst = float(np.max(np.abs(ident)))
    verdict = Verdict.CONVERGES_TO_ZERO if worst <= cfg.identity_tol else Verdict.BOUNDED
    return [
        TrendRecord("lemma23_identity", grid, verdict, float("nan"), worst <= cfg.identity_tol,
                    worst, "max |h'(psi) psi' - 1| with psi' by finite differences"),
        _record("lemma23_h2_ratio", ts, r2, "zero", cfg.trend_epsilon),
        _record("lemma23_h3_ratio", ts, r3, "zero", cfg.trend_epsilon),
    ]


def check_corollaries(model: TailModel, cls: VariationClass, ts: Sequence[float] | None = None,
                      cfg: KaramataConfig = DEFAULT_CONFIG) -> list[TrendRecord]:
    """Asymptotic equivalences for h' and sigma_hat^2 under either case."""
    if cls.kind == Kind.REGULARLY_VARYING:
        beta = cls.beta
        floor = 2.0 * (cls.beta_stderr or 0.0) / beta
        xs = _x_grid(cfg)
        h, dh = (np.asarray(v, dtype=float) for v in model.h_derivatives(xs)[:2])
        r1 = xs * dh / (beta * h) - 1.0
        if ts is None:
            ts = feasible_t_grid(model, cfg.x_low, cfg.x_high, cfg.points_per_decade)
        ts = np.asarray(ts, dtype=float)
        psi = invert_h(model, ts)
        s2 = 1.0 / np.asarray(model.h_derivatives(psi)[1], dtype=float)
        r2 = s2 * beta * ts / psi - 1.0
        return [
            _record("cor_h1_ratio", xs, r1, "zero", cfg.trend_epsilon, floor),
            _record("cor_sigma2_ratio", ts, r2, "zero", cfg.trend_epsilon, floor),
        ]
    if cls.kind == Kind.RAPIDLY_VARYING:
        if ts is None:
            ts = feasible_t_grid(model, cfg.t2_low, cfg.t2_high, cfg.t2_points_per_decade)
        ts = np.asarray(ts, dtype=float)
        psi = invert_h(model, ts)
        s2 = 1.0 / np.asarray(model.h_derivatives(psi)[1], dtype=float)
        eps_fd = ts * _d1(lambda s: invert_h(model, s), ts) / psi
        ident = s2 * ts / (psi * eps_fd) - 1.0
        worst = float(np.max(np.abs(ident)))
        grid = tuple((float(a), float(b)) for a, b in zip(ts, ident))
        verdict = Verdict.CONVERGES_TO_ZERO if worst <= cfg.identity_tol else Verdict.BOUNDED
        return [TrendRecord("cor_sigma2_identity", grid, verdict, float("nan"),
                            worst <= cfg.identity_tol, worst,
                            "max |sigma^2 t / (psi eps) - 1| with eps from finite differences of psi")]
    raise ValueError("corollary checks need a supported classification")


def check_luc(l: Callable, alpha: float, ts: Sequence[float], a: float | None = None,
              n_sup: int = 201, eps: float = DEFAULT_CONFIG.trend_epsilon,
              floor: float = 0.0) -> TrendRecord:
    """Local uniform convergence of a regularly varying ``l`` of index ``alpha``.

    With ``a`` unset the window is |x| <= sqrt(t) and the recorded value is
    sup|l(t+x)|/|l(t)| - 1.  With ``a`` in (0, 1) the window is |x| <= a t and
    the value is that ratio minus max over [1-a, 1+a] of lambda^alpha, which is
    (1+a)^alpha for alpha >= 0.  ``floor`` absorbs the uncertainty of an
    estimated ``alpha``.
    """
    ts = np.asarray(ts, dtype=float)
    half = np.sqrt(ts) if a is None else a * ts
    offsets = np.linspace(-1.0, 1.0, n_sup)
    xs = ts[:, None] + half[:, None] * offsets[None, :]
    # one vectorised call for the whole grid
    lv = np.abs(np.asarray(l(np.concatenate([xs.ravel(), ts])), dtype=float))
    sup = lv[: xs.size].reshape(xs.shape).max(axis=1) / lv[xs.size:]
    limit = 1.0 if a is None else max((1.0 + a) ** alpha, (1.0 - a) ** alpha)
    vals = sup - limit
    label = "luc_sqrt" if a is None else f"luc_linear_a{a:g}"
    return _record(label, ts, vals, "zero", eps, floor)
