"""Quadrature oracle for the MGF and the moments of the tilted law.

Everything is computed on the standardised axis y = (x - x_hat) / sigma_hat with
weights ``w(y) = exp(K(x,t) - K_hat + q(x) - q(x_hat))``.  The exponent comes
from :func:`tiltmoments.tilt.K_increment`, so weights are accurate even when
K_hat itself is astronomically large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import comb, ndtr

from .centered import increments
from .expression import Const
from .model import TailModel
from .quadrature import QuadratureError, QuadratureResult, integrate
from .tilt import InversionError, K_increment, TiltPoint, invert_h, tilt_point

__all__ = [
    "MomentSet",
    "WindowIntegrals",
    "QuadratureError",
    "log_phi",
    "psi_alpha_normalized",
    "exact_moments",
    "standardized_cdf",
    "standardized_cdf_values",
    "ks_distance_to_normal",
    "window_integrals",
]

PHI_TOL = 1e-10
MOMENT_TOL = 1e-10
HIGH_MOMENT_TOL = 1e-8
_CORE_PIECES = 16


@dataclass
class MomentSet:
    """log Phi(t), mean, variance and central moments mu[j] of the tilted law."""

    t: float
    log_phi: float
    m: float
    s2: float
    mu: dict = field(default_factory=dict)
    source: str = "Oracle"
    m_minus_xhat: float | None = None  # m - psi(t), kept at full relative accuracy
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "log_phi": self.log_phi,
            "m": self.m,
            "s2": self.s2,
            "mu": {str(k): v for k, v in sorted(self.mu.items())},
            "source": self.source,
            "m_minus_xhat": self.m_minus_xhat,
            "errors": {k: v for k, v in sorted(self.errors.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MomentSet":
        return cls(
            t=d["t"],
            log_phi=d["log_phi"],
            m=d["m"],
            s2=d["s2"],
            mu={int(k): v for k, v in d["mu"].items()},
            source=d["source"],
            m_minus_xhat=d.get("m_minus_xhat"),
            errors=dict(d.get("errors", {})),
        )


@dataclass(frozen=True)
class WindowIntegrals:
    """Integrals of y^j w(y) over the support, j = 0..len(values)-1."""

    tilt: TiltPoint
    values: np.ndarray
    errors: np.ndarray
    lower: float  # effective integration range on the y axis
    upper: float
    segments_used: int


def _window_halfwidth(t: float) -> float:
    if t > 1.0:
        return max(10.0, 2.0 * math.log(t))  # 2 L(t)^(1/3)
    return 10.0


def _weight_fn(model: TailModel, tp: TiltPoint, powers: int):
    sigma = tp.sigma_hat
    q_const = model.q_is_constant
    js = np.arange(powers + 1)[:, None]

    def f(y):
        u = sigma * y
        expo = K_increment(model, tp, u)
        if not q_const:
            expo = expo + increments(model.q, tp.x_hat, u).d1
        with np.errstate(under="ignore"):
            w = np.exp(expo)
        w = np.where(np.isnan(w), 0.0, w)
        return (y[None, :] ** js) * w[None, :]

    return f


def _tols(powers: int, tol: float | None):
    if tol is not None:
        return np.full(powers + 1, tol)
    return np.array([MOMENT_TOL if j <= 3 else HIGH_MOMENT_TOL for j in range(powers + 1)])


def window_integrals(model: TailModel, tp: TiltPoint, powers: int, tol: float | None = None,
                     extra_breaks: Sequence[float] = ()) -> WindowIntegrals:
    """Integrals of y^j w(y), j = 0..powers, over y >= (domain_low - x_hat)/sigma_hat.

    The core window [-W, W] (W = max(10, 2 log t)) is extended by doubling on
    each side until a new segment no longer changes any component.
    """
    f = _weight_fn(model, tp, powers)
    rtol = _tols(powers, tol)
    y_low = (model.domain_low - tp.x_hat) / tp.sigma_hat
    W = _window_halfwidth(tp.t)
    lo = max(-W, y_low)
    core = np.linspace(lo, W, _CORE_PIECES + 1)
    res = integrate(f, core, rtol=rtol)
    total, err, absval = res.value.copy(), res.abs_error_estimate.copy(), res.abs_value.copy()
    segs = res.segments_used

    def negligible(r: QuadratureResult) -> bool:
        return bool(np.all(np.abs(r.value) <= 1e-3 * rtol * absval))

    upper = W
    while True:
        nxt = 2.0 * upper
        r = integrate(f, np.linspace(upper, nxt, 5), rtol=rtol, atol=1e-300)
        total += r.value
        err += r.abs_error_estimate
        absval += r.abs_value
        segs += r.segments_used
        upper = nxt
        if negligible(r) or upper > 1e8:
            break
    lower = lo
    while lower > y_low:
        nxt = max(2.0 * lower, y_low)
        r = integrate(f, np.linspace(nxt, lower, 5), rtol=rtol, atol=1e-300)
        total += r.value
        err += r.abs_error_estimate
        absval += r.abs_value
        segs += r.segments_used
        lower = nxt
        if negligible(r) or lower < -1e8:
            break
    if not total[0] > 0:
        raise QuadratureError(f"tilted mass vanished at t={tp.t:g}")
    return WindowIntegrals(tp, total, err, lower, upper, segs)


# ---------------------------------------------------------------------------
# direct path (t = 0, or no interior saddlepoint)

def _direct_integrals(model: TailModel, t: float, powers: int, tol: float):
    """Integrals of x^j exp(t x - g(x) + q(x) - ref) over the domain.

    Returns (values, errors, ref).
    """
    dl = model.domain_low
    offsets = np.concatenate([np.geomspace(1e-9, 1e4, 1301)])
    xs = dl + offsets

    def expo(x):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v = t * x - model.g_value(x) + model.q_value(x)
        return np.where(np.isnan(v), -np.inf, v)

    e = expo(xs)
    ref = float(np.max(e[np.isfinite(e)]))
    imax = int(np.argmax(np.where(np.isfinite(e), e, -np.inf)))
    beyond = np.nonzero((np.arange(xs.size) > imax) & (e - ref < -745.0))[0]
    if beyond.size == 0:
        raise QuadratureError(f"density mass does not decay within the search range at t={t:g}")
    x_end = xs[beyond[0]]
    # breakpoints: the boundary, a geometric ladder, and the mode
    ladder = dl + np.geomspace(1e-9, x_end - dl, 40)
    mode = xs[imax]
    pts = np.unique(np.concatenate([[dl], ladder, [mode]]))
    js = np.arange(powers + 1)[:, None]
    center = mode

    def f(x):
        with np.errstate(under="ignore"):
            w = np.exp(expo(x) - ref)
        return ((x - center)[None, :] ** js) * w[None, :]

    res = integrate(f, pts, rtol=np.full(powers + 1, tol))
    return res.value, res.abs_error_estimate, ref, center


def _has_saddle(model: TailModel, t: float) -> bool:
    if t <= 0.0:
        return False
    try:
        invert_h(model, t)
    except InversionError:
        return False
    return True


# ---------------------------------------------------------------------------
# public operations

def log_phi(model: TailModel, t: float, tol: float = PHI_TOL) -> float:
    """log of the MGF, log E[exp(t X)], relative accuracy ``tol`` on Phi."""
    t = float(t)
    if t < 0.0:
        raise ValueError("log_phi is only supported for t >= 0")
    if not _has_saddle(model, t):
        vals, _, ref, _ = _direct_integrals(model, t, 0, tol)
        return ref + math.log(vals[0])
    tp = tilt_point(model, t)
    wi = window_integrals(model, tp, 0, tol)
    return tp.K_hat + tp.q_hat + math.log(tp.sigma_hat * wi.values[0])


def psi_alpha_normalized(model: TailModel, t: float, alpha: int, tol: float | None = None) -> float:
    """Integral of (x - x_hat)^alpha e^{tx} p(x) dx, divided by exp(K_hat)."""
    if alpha < 0 or int(alpha) != alpha:
        raise ValueError("alpha must be a non-negative integer")
    if not t > 0.0:
        raise ValueError("psi_alpha_normalized requires t > 0")
    alpha = int(alpha)
    tp = tilt_point(model, t)
    wi = window_integrals(model, tp, alpha, tol)
    return _psi_from_window(tp, wi, alpha)


def _psi_from_window(tp: TiltPoint, wi: WindowIntegrals, alpha: int) -> float:
    # x - x_hat_true = sigma*y - x_hat_lo
    s, lo = tp.sigma_hat, tp.x_hat_lo
    acc = math.fsum(
        comb(alpha, i, exact=True) * (s**i) * wi.values[i] * (-lo) ** (alpha - i)
        for i in range(alpha + 1)
    )
    return math.exp(tp.q_hat) * s * acc


def _central_from_raw(raw: Sequence[float], d: float, k: int) -> float:
    """E[(u - d)^k] from raw moments E[u^i] (raw[0] == 1)."""
    return math.fsum(comb(k, i, exact=True) * raw[i] * (-d) ** (k - i) for i in range(k + 1))


def exact_moments(model: TailModel, t: float, j_max: int = 4, tol: float | None = None) -> MomentSet:
    """Mean, variance and central moments mu[2..j_max] of the tilted law at ``t``."""
    if j_max < 2:
        raise ValueError("j_max must be >= 2")
    t = float(t)
    if not _has_saddle(model, t):
        vals, errs, ref, center = _direct_integrals(model, t, j_max, tol or MOMENT_TOL)
        raw = vals / vals[0]
        d = raw[1]
        mu = {k: _central_from_raw(raw, d, k) for k in range(2, j_max + 1)}
        return MomentSet(t, ref + math.log(vals[0]), center + d, mu[2], mu, "Oracle", None,
                         {"log_phi": float(errs[0] / vals[0])})
    tp = tilt_point(model, t)
    wi = window_integrals(model, tp, j_max, tol)
    return _moments_from_window(tp, wi, j_max)


def _moments_from_window(tp: TiltPoint, wi: WindowIntegrals, j_max: int) -> MomentSet:
    s = tp.sigma_hat
    I0 = wi.values[0]
    raw = [s**i * wi.values[i] / I0 for i in range(j_max + 1)]
    raw_err = [s**i * (wi.errors[i] + abs(wi.values[i]) * wi.errors[0] / I0) / I0
               for i in range(j_max + 1)]
    d = raw[1]
    mu = {k: _central_from_raw(raw, d, k) for k in range(2, j_max + 1)}
    errors = {"log_phi": float(wi.errors[0] / I0), "m": float(raw_err[1])}
    for k in range(2, j_max + 1):
        errors[f"mu{k}"] = float(sum(comb(k, i, exact=True) * raw_err[i] * abs(d) ** (k - i)
                                     for i in range(k + 1)))
    errors["s2"] = errors["mu2"]
    log_phi_v = tp.K_hat + tp.q_hat + math.log(s * I0)
    return MomentSet(
        t=tp.t,
        log_phi=log_phi_v,
        m=tp.x_hat + d,
        s2=mu[2],
        mu=mu,
        source="Oracle",
        m_minus_xhat=d - tp.x_hat_lo,
        errors=errors,
    )


def standardized_cdf_values(model: TailModel, t: float, ys: Sequence[float],
                            moments: MomentSet | None = None) -> np.ndarray:
    """P((X_t - m(t)) / s(t) <= y) for each y in ``ys``."""
    ys = np.asarray(ys, dtype=float)
    if ys.size == 0:
        raise ValueError("need at least one evaluation point")
    tp = tilt_point(model, t)
    if moments is None:
        wi = window_integrals(model, tp, 2)
        moments = _moments_from_window(tp, wi, 2)
    else:
        wi = window_integrals(model, tp, 0)
    s = math.sqrt(moments.s2)
    d = moments.m - tp.x_hat if moments.m_minus_xhat is None else moments.m_minus_xhat + tp.x_hat_lo
    v = (d + s * ys) / tp.sigma_hat  # cut points on the y axis
    lo, hi = wi.lower, wi.upper
    inner = np.clip(v, lo, hi)
    core = np.linspace(lo, hi, 65)
    pts = np.unique(np.concatenate([core, inner]))
    f = _weight_fn(model, tp, 0)
    res = integrate(f, pts, rtol=1e-11, return_pieces=True)
    cum = np.concatenate([[0.0], np.cumsum(res.pieces[0])])
    total = cum[-1]
    idx = np.searchsorted(pts, inner)
    out = cum[idx] / total
    out[v <= lo] = 0.0
    out[v >= hi] = 1.0
    return np.clip(out, 0.0, 1.0)


def standardized_cdf(model: TailModel, t: float, y: float) -> float:
    if np.isposinf(y):
        return 1.0
    if np.isneginf(y):
        return 0.0
    return float(standardized_cdf_values(model, t, [y])[0])


def ks_distance_to_normal(model: TailModel, t: float, ys: Sequence[float] | None = None) -> float:
    """Max over a y-grid (default 201 points on [-5, 5]) of |F_t(y) - N(y)|."""
    if ys is None:
        ys = np.linspace(-5.0, 5.0, 201)
    ys = np.asarray(ys, dtype=float)
    if ys.size < 1:
        raise ValueError("the y grid must contain at least one point")
    F = standardized_cdf_values(model, t, ys)
    return float(np.max(np.abs(F - ndtr(ys))))
