"""Exact-vs-asymptotic comparisons over t-grids and the assembled report.

Pass thresholds and the monotonicity noise margin are engineering choices
calibrated against the quadrature oracle; the asymptotic statements being
checked carry no convergence rates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import asymptotics as asy
from .karamata import (
    KaramataConfig,
    Kind,
    TrendRecord,
    VariationClass,
    check_corollaries,
    check_lemma_2_3,
    check_luc,
    classify,
    feasible_t_grid,
    trend_verdict,
    Verdict,
    _x_grid,
)
from .model import TailModel, validate_model
from .oracle import exact_moments, ks_distance_to_normal, log_phi, psi_alpha_normalized
from .quadrature import QuadratureError
from .tilt import InversionError, L_of, integral_psi, invert_h, tilt_point

__all__ = [
    "DiagnosticsConfig",
    "RatioRow",
    "RatioSeries",
    "GaussianRow",
    "DiagnosticsReport",
    "ratio_suite",
    "lemma45_suite",
    "mgf_convergence",
    "MgfPreconditionError",
    "gaussian_suite",
    "lemma_trends",
    "condition_trends",
    "assemble_report",
    "format_float",
]

NEAR_ZERO = "NearZeroDenominator"
DEFAULT_THRESHOLDS = {"log_phi": 0.02, "m": 0.02, "s2": 0.02, "mu": 0.10, "psi_alpha": 0.05}


@dataclass(frozen=True)
class DiagnosticsConfig:
    t_grid: tuple = tuple(np.geomspace(10.0, 1e4, 7).tolist())
    j_max: int = 6
    quadrature_tol: float | None = None
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    noise_factor: float = 10.0
    alphas: tuple = (0, 1, 2, 3, 4)
    gaussian_t_grid: tuple | None = None  # defaults to t_grid
    lambda_grid: tuple = tuple(np.linspace(-2.0, 2.0, 9).tolist())
    ks_noise: float = 1e-3
    ks_threshold: float = 0.05
    mgf_threshold: float = 0.05
    t_min: float = asy.T_MIN
    lemma_t_high: float = 1e60
    lemma_points_per_decade: int = 8
    karamata: KaramataConfig = KaramataConfig()

    def threshold(self, label: str) -> float:
        if label.startswith("mu"):
            return self.thresholds["mu"]
        if label.startswith("psi_alpha"):
            return self.thresholds["psi_alpha"]
        return self.thresholds[label]


def format_float(v) -> str:
    """Shortest round-trip decimal representation; empty for missing values."""
    if v is None:
        return ""
    return repr(float(v))


def _num(v):
    """JSON-safe float: non-finite values become None."""
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


# ---------------------------------------------------------------------------
# ratio series

@dataclass(frozen=True)
class RatioRow:
    t: float
    exact: float | None
    asymptotic: float | None
    ratio: float | None
    noise: float = 0.0  # relative oracle error estimate
    flag: str = ""

    def to_dict(self) -> dict:
        return {"t": self.t, "exact": _num(self.exact), "asymptotic": _num(self.asymptotic),
                "ratio": _num(self.ratio), "noise": _num(self.noise), "flag": self.flag}


@dataclass(frozen=True)
class RatioSeries:
    label: str
    rows: tuple
    converged: bool | None
    final_abs_dev: float | None
    threshold: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "threshold": self.threshold,
            "converged": self.converged,
            "final_abs_dev": _num(self.final_abs_dev),
            "note": self.note,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "exact", "asymptotic", "ratio"])
        for r in self.rows:
            w.writerow([format_float(r.t), format_float(r.exact), format_float(r.asymptotic),
                        format_float(r.ratio)])
        return buf.getvalue()


def _judge(label: str, rows: list[RatioRow], threshold: float, noise_factor: float) -> RatioSeries:
    """Apply the convergence rule: monotone |ratio - 1| on the top half, small at the end."""
    rows = tuple(rows)
    if rows and all(r.flag == NEAR_ZERO for r in rows):
        return RatioSeries(label, rows, None, None, threshold,
                           "asymptotic side vanishes identically; series skipped")
    if len(rows) < 2:
        final = abs(rows[0].ratio - 1.0) if rows and rows[0].ratio is not None else None
        return RatioSeries(label, rows, None, final, threshold,
                           "degenerate grid: convergence undefined")
    last = rows[-1]
    if last.ratio is None:
        return RatioSeries(label, rows, False, None, threshold, f"last row unavailable: {last.flag}")
    top = [r for r in rows[len(rows) // 2:] if r.ratio is not None]
    devs = [abs(r.ratio - 1.0) for r in top]
    monotone = True
    for (a, da), (b, db) in zip(zip(top, devs), zip(top[1:], devs[1:])):
        slack = noise_factor * max(a.noise, b.noise) + 1e-12
        if db > da + slack:
            monotone = False
    final = devs[-1]
    converged = monotone and final < threshold
    note = "" if monotone else "|ratio - 1| not monotone on the top half of the grid"
    if any(r.flag for r in rows):
        note = (note + "; " if note else "") + "some rows flagged"
    return RatioSeries(label, rows, converged, final, threshold, note)


def _near_zero(den: float, scale: float) -> bool:
    return abs(den) <= 1e-13 * scale


def ratio_suite(model: TailModel, t_grid: Sequence[float], j_max: int = 6,
                cfg: DiagnosticsConfig = DiagnosticsConfig()) -> list[RatioSeries]:
    """RatioSeries for Phi, m, s^2 and mu_3..mu_{j_max}; exact side from the oracle."""
    labels = ["log_phi", "m", "s2"] + [f"mu{j}" for j in range(3, j_max + 1)]
    rows: dict[str, list[RatioRow]] = {k: [] for k in labels}
    for t in t_grid:
        t = float(t)
        try:
            if not t > cfg.t_min:
                raise ValueError(f"t={t:g} below t_min={cfg.t_min:g}")
            tp = tilt_point(model, t)
            ex = exact_moments(model, t, j_max, cfg.quadrature_tol)
            ap = asy.approx_moments(model, t, j_max, cfg.t_min, tp)
        except (QuadratureError, InversionError, ValueError, ArithmeticError) as exc:
            flag = f"Failed: {type(exc).__name__}: {exc}"
            for k in labels:
                rows[k].append(RatioRow(t, None, None, None, 0.0, flag))
            continue
        rows["log_phi"].append(RatioRow(t, ex.log_phi, ap.log_phi, math.exp(ex.log_phi - ap.log_phi),
                                        ex.errors.get("log_phi", 0.0)))
        rows["m"].append(RatioRow(t, ex.m, ap.m, 1.0 + ex.m_minus_xhat / tp.x_hat,
                                  ex.errors.get("m", 0.0) / abs(ex.m)))
        rows["s2"].append(RatioRow(t, ex.s2, ap.s2, ex.s2 / ap.s2, ex.errors["s2"] / ex.s2))
        for j in range(3, j_max + 1):
            e, a = ex.mu[j], ap.mu[j]
            if _near_zero(a, ap.s2 ** (j / 2)):
                rows[f"mu{j}"].append(RatioRow(t, e, a, None, 0.0, NEAR_ZERO))
            else:
                noise = ex.errors[f"mu{j}"] / abs(e) if e else float("inf")
                rows[f"mu{j}"].append(RatioRow(t, e, a, e / a, noise))
    return [_judge(k, rows[k], cfg.threshold(k), cfg.noise_factor) for k in labels]


def lemma45_suite(model: TailModel, t_grid: Sequence[float],
                  cfg: DiagnosticsConfig = DiagnosticsConfig()) -> list[RatioSeries]:
    """psi_alpha_normalized / (sigma_hat^(alpha+1) e^{q_hat} T1) for each alpha."""
    out = []
    for alpha in cfg.alphas:
        rows = []
        for t in t_grid:
            t = float(t)
            try:
                tp = tilt_point(model, t)
                e = psi_alpha_normalized(model, t, alpha, cfg.quadrature_tol)
                a = asy.approx_psi_alpha(model, t, alpha, tp)
            except (QuadratureError, InversionError, ValueError, ArithmeticError) as exc:
                rows.append(RatioRow(t, None, None, None, 0.0, f"Failed: {type(exc).__name__}: {exc}"))
                continue
            scale = tp.sigma_hat ** (alpha + 1) * math.exp(tp.q_hat)
            if _near_zero(a, scale):
                rows.append(RatioRow(t, e, a, None, 0.0, NEAR_ZERO))
            else:
                rows.append(RatioRow(t, e, a, e / a, 0.0))
        label = f"psi_alpha{alpha}"
        out.append(_judge(label, rows, cfg.threshold(label), cfg.noise_factor))
    return out


# ---------------------------------------------------------------------------
# Gaussian convergence

class MgfPreconditionError(ValueError):
    """t + lambda/s(t) is not positive for some lambda in the grid."""


def mgf_convergence(model: TailModel, t: float, lambda_grid: Sequence[float] | None = None,
                    tol: float | None = None) -> float:
    """Max over lambda of |log E exp(lambda Y_t) - lambda^2/2|, Y_t the standardised tilt."""
    if lambda_grid is None:
        lambda_grid = np.linspace(-2.0, 2.0, 9)
    ex = exact_moments(model, t, 2, tol)
    s = math.sqrt(ex.s2)
    base = ex.log_phi
    devs = []
    for lam in lambda_grid:
        lam = float(lam)
        if lam == 0.0:
            devs.append(0.0)
            continue
        t2 = t + lam / s
        if not t2 > 0.0:
            raise MgfPreconditionError(f"t + lambda/s = {t2:g} is not positive (lambda={lam:g})")
        lp = log_phi(model, t2, tol or 1e-12)
        # lambda*m/s split as lambda*x_hat/s + lambda*(m - x_hat)/s to limit cancellation
        centred = lp - base - lam * ex.m / s
        devs.append(abs(centred - 0.5 * lam * lam))
    return float(max(devs))


@dataclass(frozen=True)
class GaussianRow:
    t: float
    ks_distance: float | None
    mgf_dev: float | None
    flag: str = ""

    def to_dict(self) -> dict:
        return {"t": self.t, "ks_distance": _num(self.ks_distance), "mgf_dev": _num(self.mgf_dev),
                "flag": self.flag}


def gaussian_suite(model: TailModel, t_grid: Sequence[float],
                   cfg: DiagnosticsConfig = DiagnosticsConfig()) -> tuple[list[GaussianRow], bool | None, str]:
    """KS distance and MGF deviation per t, with an overall convergence flag."""
    rows = []
    for t in t_grid:
        t = float(t)
        try:
            ks = ks_distance_to_normal(model, t)
        except (QuadratureError, InversionError, ValueError, ArithmeticError) as exc:
            rows.append(GaussianRow(t, None, None, f"Failed: {type(exc).__name__}: {exc}"))
            continue
        try:
            dev = mgf_convergence(model, t, cfg.lambda_grid, cfg.quadrature_tol)
            rows.append(GaussianRow(t, ks, dev))
        except MgfPreconditionError as exc:
            # small t with a narrow tilted law: t + lambda/s leaves the supported range
            rows.append(GaussianRow(t, ks, None, f"PreconditionViolated: {exc}"))
        except (QuadratureError, InversionError, ValueError, ArithmeticError) as exc:
            rows.append(GaussianRow(t, ks, None, f"Failed: {type(exc).__name__}: {exc}"))
    if len(rows) < 2:
        return rows, None, "degenerate grid: convergence undefined"
    if any(r.ks_distance is None or r.flag.startswith("Failed") for r in rows):
        return rows, False, "some rows failed"
    if rows[-1].mgf_dev is None:
        return rows, False, "mgf deviation unavailable at the largest t"
    ks = [r.ks_distance for r in rows]
    monotone = all(b <= a + cfg.ks_noise for a, b in zip(ks, ks[1:]))
    ok = monotone and ks[-1] < cfg.ks_threshold and rows[-1].mgf_dev < cfg.mgf_threshold
    note = "" if monotone else "ks distance not nonincreasing"
    return rows, ok, note


# ---------------------------------------------------------------------------
# trend diagnostics

def lemma_trends(model: TailModel, cfg: DiagnosticsConfig = DiagnosticsConfig()) -> list[TrendRecord]:
    """Closed-form little-o quantities on a long t-grid (cut where inversion fails).

    log sigma_hat / int_1^t psi, |h''| sigma_hat^4 and |h''| sigma_hat^3 L(t).
    These need no quadrature, so the grid can run far beyond the oracle grid.
    """
    kc = cfg.karamata
    ts = feasible_t_grid(model, max(10.0, cfg.t_min), cfg.lemma_t_high, cfg.lemma_points_per_decade)
    if ts.size == 0:
        return [TrendRecord("lemma41_log_sigma_over_int_psi", (), Verdict.INCONCLUSIVE,
                            float("nan"), False, None, "no invertible t")]
    psi = invert_h(model, ts)
    h1, h2 = (np.asarray(v, dtype=float) * np.ones_like(ts) for v in model.h_derivatives(psi)[1:3])
    s2 = 1.0 / h1
    # integral of psi over [1, t] = K(x_hat, t) - psi(1) + g(psi(1)); float accuracy
    # is ample for a ratio that tends to zero
    K = ts * psi - np.asarray(model.g_value(psi), dtype=float)
    note41 = ""
    try:
        ipsi = integral_psi(model, float(ts[0])) + (K - K[0])
    except InversionError:
        # psi(1) does not exist (h > 1 on the whole domain); a different lower
        # limit changes the integral by a constant, which does not affect the limit
        ts, psi, h1, h2, s2 = ts[1:], psi[1:], h1[1:], h2[1:], s2[1:]
        ipsi = K[1:] - K[0]
        note41 = f"psi(1) undefined; integral taken from t={ts[0]:g}"
    v41 = 0.5 * np.log(s2) / ipsi
    v43a = np.abs(h2) * s2**2
    v43b = np.abs(h2) * s2**1.5 * L_of(ts)

    def rec(label, vals, note=""):
        verdict, ratio = trend_verdict(vals, kc.trend_epsilon)
        grid = tuple((float(a), float(b)) for a, b in zip(ts, vals))
        return TrendRecord(label, grid, verdict, ratio, verdict == Verdict.CONVERGES_TO_ZERO,
                           note=note)

    return [rec("lemma41_log_sigma_over_int_psi", v41, note41),
            rec("lemma43_h2_sigma4", v43a),
            rec("lemma43_h2_sigma3_L", v43b)]


def condition_trends(model: TailModel, cls: VariationClass,
                     cfg: DiagnosticsConfig = DiagnosticsConfig()) -> list[TrendRecord]:
    """Corollary, Lemma 2.3 (rapid case) and local-uniform-convergence checks."""
    kc = cfg.karamata
    recs = list(check_corollaries(model, cls, cfg=kc))
    if cls.kind == Kind.RAPIDLY_VARYING:
        recs.extend(check_lemma_2_3(model, cfg=kc))
        ts = feasible_t_grid(model, kc.t2_low, kc.t2_high, kc.t2_points_per_decade)
        recs.append(check_luc(lambda s: invert_h(model, s), 0.0, ts))
    else:
        xs = _x_grid(kc)
        recs.append(check_luc(model.h, cls.beta, xs))
        # (1+a)^beta with beta estimated: allow for its standard error
        floor = 2.0 * (cls.beta_stderr or 0.0) * math.log(1.5) * 1.5**cls.beta
        recs.append(check_luc(model.h, cls.beta, xs, a=0.5, floor=floor))
    return recs


# ---------------------------------------------------------------------------
# report

@dataclass(frozen=True)
class DiagnosticsReport:
    label: str
    model: dict
    validation: dict
    variation: VariationClass
    ratio_series: tuple
    trends: tuple
    gaussian: tuple
    gaussian_converged: bool | None
    verdict: str
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "model": self.model,
            "validation": self.validation,
            "variation": self.variation.to_dict(),
            "ratio_series": [s.to_dict() for s in self.ratio_series],
            "trends": [r.to_dict() for r in self.trends],
            "gaussian_convergence": {
                "converged": self.gaussian_converged,
                "rows": [r.to_dict() for r in self.gaussian],
            },
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def _guarded(label: str, fn, *args) -> list[TrendRecord]:
    """Run a block of trend checks; a numerical failure becomes one failed record."""
    try:
        return list(fn(*args))
    except (QuadratureError, InversionError, ValueError, ArithmeticError) as exc:
        return [TrendRecord(label, (), Verdict.INCONCLUSIVE, float("nan"), False, None,
                            f"Failed: {type(exc).__name__}: {exc}")]


def assemble_report(model: TailModel, cfg: DiagnosticsConfig = DiagnosticsConfig()) -> DiagnosticsReport:
    """Validation, classification, condition checks, ratio suites and Gaussian suite.

    The verdict is UNSUPPORTED when validation or classification fails (the
    numerical suites are then skipped), PASS when every judged series
    converged and every trend record passed, FAIL otherwise.
    """
    validation = validate_model(model)
    cls = classify(model, cfg.karamata) if validation.passed else VariationClass(
        Kind.UNSUPPORTED, note="model validation failed")
    if not (validation.passed and cls.supported):
        return DiagnosticsReport(model.label, model.to_dict(), validation.to_dict(), cls,
                                 (), tuple(cls.evidence), (), None, "UNSUPPORTED",
                                 ("numerical suites skipped for an unsupported model",))
    trends = list(cls.evidence)
    trends.extend(_guarded("condition_checks", condition_trends, model, cls, cfg))
    trends.extend(_guarded("lemma_checks", lemma_trends, model, cfg))
    series = ratio_suite(model, cfg.t_grid, cfg.j_max, cfg)
    series.extend(lemma45_suite(model, cfg.t_grid, cfg))
    g_grid = cfg.gaussian_t_grid if cfg.gaussian_t_grid is not None else cfg.t_grid
    grows, gconv, gnote = gaussian_suite(model, g_grid, cfg)

    notes = []
    failed = [s.label for s in series if s.converged is False]
    undefined = [s.label for s in series if s.converged is None and s.rows
                 and not all(r.flag == NEAR_ZERO for r in s.rows)]
    bad_trends = [r.label for r in trends if not r.passed]
    if failed:
        notes.append("series not converged: " + ", ".join(failed))
    if undefined:
        notes.append("series with undefined convergence: " + ", ".join(undefined))
    if bad_trends:
        notes.append("trend checks failed: " + ", ".join(bad_trends))
    if gconv is not True:
        notes.append("gaussian suite: " + (gnote or "not converged"))
    ok = not failed and not undefined and not bad_trends and gconv is True
    return DiagnosticsReport(model.label, model.to_dict(), validation.to_dict(), cls,
                             tuple(series), tuple(trends), tuple(grows), gconv,
                             "PASS" if ok else "FAIL", tuple(notes))
