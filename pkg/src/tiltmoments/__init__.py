"""Exact and asymptotic moments of exponentially tilted light-tailed laws.

For a density p(x) = exp(-(g(x) - q(x))) the tilted law at t has density
e^{tx} p(x) / Phi(t).  The package computes its moments by quadrature,
compares them with saddlepoint equivalents built from h = g' and its
inverse psi, and checks the growth conditions under which those
equivalents hold.
"""

from .asymptotics import (
    T1,
    approx_log_phi,
    approx_moments,
    approx_psi_alpha,
    gauss_moment,
    refined_m,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .diagnostics import (
    DiagnosticsConfig,
    DiagnosticsReport,
    RatioSeries,
    assemble_report,
    gaussian_suite,
    mgf_convergence,
    ratio_suite,
)
from .expression import DomainError, ExpressionSyntaxError, evaluate, parse_expression, to_source
from .karamata import (
    Kind,
    TrendRecord,
    VariationClass,
    Verdict,
    check_case1_conditions,
    check_case2_conditions,
    check_corollaries,
    check_lemma_2_3,
    check_luc,
    check_q_conditions,
    classify,
    epsilon_t,
    epsilon_x,
    estimate_rv_index,
)
from .model import TailModel, builtin_model, model_from_strings, validate_model
from .oracle import (
    MomentSet,
    exact_moments,
    ks_distance_to_normal,
    log_phi,
    psi_alpha_normalized,
    standardized_cdf,
)
from .quadrature import QuadratureError, integrate
from .tilt import InversionError, TiltPoint, integral_psi, invert_h, tilt_point

__version__ = "0.1.0"
