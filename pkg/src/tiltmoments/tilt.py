"""Saddlepoint of the tilted exponent K(x, t) = t x - g(x).

For each tilt ``t`` the maximiser x_hat = psi(t) solves h(x_hat) = t.  Besides
the float saddlepoint, :func:`tilt_point` stores the rounding correction
``x_hat_lo`` (so that x_hat + x_hat_lo is accurate well below one ulp) and the
residual ``t - h(x_hat)`` evaluated in extended precision.  Differences such as
m(t) - x_hat can be far below ulp(x_hat) and are only meaningful with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .centered import increments
from .model import TailModel

__all__ = [
    "InversionError",
    "TiltPoint",
    "invert_h",
    "tilt_point",
    "K_value",
    "K_increment",
    "K_remainder",
    "L_of",
    "integral_psi",
]

X_MAX = 1e12
START_OFFSET = 1e-6
RTOL = 1e-12
_MP_DPS = 40


class InversionError(ValueError):
    """h(x) = t could not be solved on the model domain."""

    def __init__(self, message: str, t=None, witness=None):
        self.t = t
        self.witness = witness
        super().__init__(message)


def invert_h(model: TailModel, t, atol: float = 0.0, rtol: float = RTOL):
    """psi(t): the solution of h(x) = t, for scalar or array ``t``.

    Geometric bracketing from max(domain_low + 1e-6, 1), bisection to 1e-3
    relative width, then safeguarded Newton steps using h'.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    low = model.domain_low + START_OFFSET
    x0 = max(low, 1.0)

    def hval(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(model.h(x), dtype=float) * np.ones_like(x)

    lo = np.full_like(t, np.nan)
    hi = np.full_like(t, x0)
    h_hi = hval(hi)
    # upward doubling
    up = h_hi < t
    lo[up] = x0
    h_lo = np.where(up, h_hi, np.nan)
    while np.any(up):
        if np.any(hi[up] >= X_MAX):
            bad = t[up & (hi >= X_MAX)][0]
            raise InversionError(f"no bracket for t={bad:g} below x_max={X_MAX:g}", t=bad, witness=X_MAX)
        nxt = np.where(up, np.minimum(hi * 2.0, X_MAX), hi)
        h_nxt = hval(nxt)
        dec = up & (h_nxt < h_hi)
        if np.any(dec):
            i = int(np.argmax(dec))
            raise InversionError("h is not monotone", t=t[i], witness=(hi[i], nxt[i]))
        lo = np.where(up, hi, lo)
        h_lo = np.where(up, h_hi, h_lo)
        hi, h_hi = nxt, np.where(up, h_nxt, h_hi)
        up = up & (h_hi < t)
    # downward halving towards the domain boundary
    down = np.isnan(lo)
    lo = np.where(down, hi, lo)
    h_lo = np.where(down, h_hi, h_lo)
    for _ in range(200):
        need = down & ~(h_lo < t)
        if not np.any(need):
            break
        hi = np.where(need, lo, hi)
        h_hi = np.where(need, h_lo, h_hi)
        nxt = low + 0.5 * (lo - low)
        h_nxt = hval(nxt)
        lo = np.where(need, nxt, lo)
        h_lo = np.where(need, h_nxt, h_lo)
        if np.any(need & (lo - low <= 1e-300 + 1e-15 * low)):
            break
    missing = ~(h_lo < t)
    if np.any(missing):
        bad = t[missing][0]
        raise InversionError(f"t={bad:g} is not above h(domain_low+)", t=bad, witness=low)

    # bisection
    for _ in range(200):
        wide = (hi - lo) > 1e-3 * np.abs(hi)
        if not np.any(wide):
            break
        mid = 0.5 * (lo + hi)
        hm = hval(mid)
        left = wide & (hm >= t)
        right = wide & (hm < t)
        hi = np.where(left, mid, hi)
        lo = np.where(right, mid, lo)

    # Newton polish inside the bracket
    x = 0.5 * (lo + hi)
    for _ in range(60):
        jet = model.h_derivatives(x)
        hx, dh = np.asarray(jet[0], dtype=float), np.asarray(jet[1], dtype=float)
        lo = np.where(hx < t, np.maximum(lo, x), lo)
        hi = np.where(hx >= t, np.minimum(hi, x), hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (hx - t) / dh
        nx = x - step
        outside = ~((nx >= lo) & (nx <= hi)) | ~np.isfinite(nx)
        nx = np.where(outside, 0.5 * (lo + hi), nx)
        done = np.abs(nx - x) <= 2e-16 * np.abs(x)
        x = nx
        if np.all(done):
            break
    resid = np.abs(hval(x) - t)
    tol = atol + rtol * np.abs(t)
    if np.any(resid > tol):
        # the float grid may not contain a point closer than this; accept if
        # neighbouring floats bracket the root
        xn = np.nextafter(x, np.inf)
        xp = np.nextafter(x, -np.inf)
        bracketed = (hval(xp) - t) * (hval(xn) - t) <= 0
        if not np.all(bracketed | (resid <= tol)):
            i = int(np.argmax(resid > tol))
            raise InversionError(f"inversion did not converge for t={t[i]:g}", t=t[i])
    return float(x[0]) if scalar else x


@dataclass(frozen=True)
class TiltPoint:
    """Saddlepoint bundle at tilt ``t``.

    ``x_hat_lo`` corrects the rounded saddlepoint (true root ~ x_hat + x_hat_lo);
    ``residual`` is t - h(x_hat) computed in extended precision.
    """

    t: float
    x_hat: float
    sigma_hat2: float
    K_hat: float
    x_hat_lo: float = 0.0
    residual: float = 0.0
    q_hat: float = 0.0
    h1: float = 0.0  # h'(x_hat)
    h2: float = 0.0  # h''(x_hat)
    h3: float = 0.0  # h'''(x_hat)

    @property
    def sigma_hat(self) -> float:
        return math.sqrt(self.sigma_hat2)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "x_hat": self.x_hat,
            "sigma_hat2": self.sigma_hat2,
            "K_hat": self.K_hat,
            "x_hat_lo": self.x_hat_lo,
            "residual": self.residual,
            "q_hat": self.q_hat,
            "h1": self.h1,
            "h2": self.h2,
            "h3": self.h3,
        }


def tilt_point(model: TailModel, t: float) -> TiltPoint:
    t = float(t)
    x = invert_h(model, t)
    d = model.g_derivatives(x)
    h1, h2, h3 = (float(v) for v in d[2:])
    if not h1 > 0:
        raise InversionError(f"h'(x_hat) = {h1:g} is not positive at t={t:g}", t=t, witness=x)
    with mpmath.workdps(_MP_DPS):
        xm = mpmath.mpf(x)
        gj = model.g_derivatives(xm)
        r = mpmath.mpf(t) - gj[1]
        K = mpmath.mpf(t) * xm - gj[0]
        residual = float(r)
        lo = float(r / gj[2])
        K_hat = float(K)
    q_hat = float(model.q_value(x))
    return TiltPoint(t, x, 1.0 / h1, K_hat, lo, residual, q_hat, h1, h2, h3)


def K_value(model: TailModel, x, t):
    """K(x, t) = t x - g(x), evaluated directly."""
    return t * np.asarray(x, dtype=float) - model.g_value(np.asarray(x, dtype=float))


def K_increment(model: TailModel, tp: TiltPoint, u):
    """K(x_hat + u, t) - K(x_hat, t), accurate relative to its own size."""
    inc = increments(model.g, tp.x_hat, u)
    return tp.residual * np.asarray(u, dtype=float) - inc.d2


def K_remainder(model: TailModel, tp: TiltPoint, x):
    """Cubic Taylor term of K around x_hat and the quartic remainder.

    Returns ``(cubic_term, epsilon_xt)`` with cubic_term = -h''(x_hat)(x-x_hat)^3/6
    and epsilon_xt = K(x,t) - [K_hat - (x-x_hat)^2/(2 sigma_hat^2) + cubic_term].
    """
    x = np.asarray(x, dtype=float)
    u = x - tp.x_hat
    dK = K_increment(model, tp, u)
    # residual*u is the exact linear term from expanding at the rounded x_hat
    cubic = -tp.h2 * u**3 / 6.0
    eps = dK - tp.residual * u + u**2 / (2.0 * tp.sigma_hat2) - cubic
    if eps.ndim == 0:
        return float(cubic), float(eps)
    return cubic, eps


def L_of(t):
    """(log t)^3, defined for t > 1."""
    if np.any(np.asarray(t) <= 1.0):
        raise ValueError("L(t) requires t > 1")
    return np.log(t) ** 3


def integral_psi(model: TailModel, t: float) -> float:
    """Closed form of the integral of psi over [1, t]: K(x_hat, t) - psi(1) + g(psi(1))."""
    if not t > 1.0:
        if t == 1.0:
            return 0.0
        raise ValueError("integral_psi requires t > 1")
    p1 = invert_h(model, 1.0)
    tp = tilt_point(model, t)
    with mpmath.workdps(_MP_DPS):
        g1 = model.g_value(mpmath.mpf(p1))
        return float(mpmath.mpf(tp.K_hat) - p1 + g1)
