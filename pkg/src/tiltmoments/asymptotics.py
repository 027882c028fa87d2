"""Closed-form large-t equivalents for the tilted moments and the MGF.

psi' and psi'' are taken from h-derivatives at the saddlepoint
(psi' = 1/h'(x_hat), psi'' = -h''(x_hat) psi'^3), never by differencing psi.
Constant offsets in q enter the MGF as the factor exp(q(x_hat)).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .model import TailModel
from .oracle import MomentSet
from .quadrature import integrate
from .tilt import L_of, TiltPoint, tilt_point

__all__ = [
    "T_MIN",
    "gauss_moment",
    "odd_moment_coefficient",
    "psi_derivatives",
    "approx_moments",
    "approx_log_phi",
    "refined_m",
    "refined_m_offset",
    "T1",
    "approx_psi_alpha",
]

T_MIN = math.e**2


@lru_cache(maxsize=None)
def gauss_moment(i: int) -> float:
    """E[Z^i] for a standard normal Z: (i-1)!! for even i, 0 for odd i."""
    if i < 0:
        raise ValueError("moment order must be >= 0")
    if i % 2:
        return 0.0
    out = 1
    for k in range(i - 1, 0, -2):
        out *= k
    return float(out)


def odd_moment_coefficient(j: int) -> float:
    """(M_{j+3} - 3 j M_{j-1}) / 6, the factor multiplying mu_3 s^(j-3) for odd j > 3."""
    return (gauss_moment(j + 3) - 3 * j * gauss_moment(j - 1)) / 6.0


def psi_derivatives(tp: TiltPoint) -> tuple[float, float, float, float]:
    """(psi, psi', psi'', psi''') at tp.t from h-derivatives at the saddlepoint."""
    d1 = tp.sigma_hat2
    d2 = -tp.h2 * d1**3
    d3 = (3.0 * d2**2 - tp.h3 * d1**5) / d1
    return tp.x_hat, d1, d2, d3


def _check_regime(t: float, t_min: float):
    if not t > t_min:
        raise ValueError(f"t={t:g} is below the asymptotic regime t_min={t_min:g}")


def approx_moments(model: TailModel, t: float, j_max: int = 4, t_min: float = T_MIN,
                   tp: TiltPoint | None = None) -> MomentSet:
    """Leading-order m, s^2 and mu_j (j = 3..j_max)."""
    _check_regime(t, t_min)
    tp = tp or tilt_point(model, t)
    psi, d1, d2, _ = psi_derivatives(tp)
    mu = {2: d1}
    if j_max >= 3:
        mu[3] = d2
    for j in range(4, j_max + 1):
        if j % 2 == 0:
            mu[j] = gauss_moment(j) * d1 ** (j / 2)
        else:
            mu[j] = odd_moment_coefficient(j) * d2 * d1 ** ((j - 3) / 2)
    return MomentSet(
        t=float(t),
        log_phi=_approx_log_phi(tp),
        m=psi,
        s2=d1,
        mu=mu,
        source="Asymptotic",
        m_minus_xhat=0.0,
    )


def _approx_log_phi(tp: TiltPoint) -> float:
    return tp.K_hat + tp.q_hat + 0.5 * math.log(2.0 * math.pi * tp.sigma_hat2)


def approx_log_phi(model: TailModel, t: float, t_min: float = 0.0) -> float:
    """K(x_hat, t) + q(x_hat) + log(sqrt(2 pi) sigma_hat)."""
    if t_min:
        _check_regime(t, t_min)
    return _approx_log_phi(tilt_point(model, t))


def refined_m(model: TailModel, t: float, tp: TiltPoint | None = None) -> float:
    """x_hat - h''(x_hat) sigma_hat^4 / 2."""
    tp = tp or tilt_point(model, t)
    return tp.x_hat + refined_m_offset(tp)


def refined_m_offset(tp: TiltPoint) -> float:
    """refined_m - psi(t), without the rounding of x_hat."""
    return -tp.h2 * tp.sigma_hat2**2 / 2.0


def _truncated_gauss(power: int, a: float) -> float:
    if power % 2:
        return 0.0  # odd integrand on a symmetric interval
    res = integrate(lambda y: y**power * np.exp(-0.5 * y * y), np.linspace(-a, a, 9), rtol=1e-13)
    return float(res.value[0])


def T1(model: TailModel, t: float, alpha: int, tp: TiltPoint | None = None) -> float:
    """Truncated Gaussian functional of the third-order expansion.

    Integral over |y| <= L(t)^(1/3)/sqrt(2) of y^alpha e^{-y^2/2}, minus
    h''(x_hat) sigma_hat^3 / 6 times the same integral of y^(alpha+3).
    """
    if alpha < 0 or int(alpha) != alpha:
        raise ValueError("alpha must be a non-negative integer")
    if not t > math.e:
        raise ValueError("T1 requires t > e")
    tp = tp or tilt_point(model, t)
    a = L_of(t) ** (1.0 / 3.0) / math.sqrt(2.0)
    first = _truncated_gauss(int(alpha), a)
    second = _truncated_gauss(int(alpha) + 3, a)
    return first - tp.h2 * tp.sigma_hat**3 / 6.0 * second


def approx_psi_alpha(model: TailModel, t: float, alpha: int, tp: TiltPoint | None = None) -> float:
    """sigma_hat^(alpha+1) exp(q(x_hat)) T1(t, alpha), on the exp(K_hat) scale."""
    tp = tp or tilt_point(model, t)
    return tp.sigma_hat ** (alpha + 1) * math.exp(tp.q_hat) * T1(model, t, alpha, tp)
