import math

import mpmath
import pytest

from tiltmoments.model import builtin_model

# acceptance-criterion outcomes, printed in the terminal summary
CRITERIA: dict[str, list[tuple[str, bool]]] = {}


def record_criterion(number: int, description: str, passed: bool):
    CRITERIA.setdefault(f"{number}", []).append((description, passed))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=int):
        for desc, ok in CRITERIA[key]:
            terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {desc}")


@pytest.fixture(scope="session")
def weibull2():
    return builtin_model("weibull", [2])


@pytest.fixture(scope="session")
def weibull3():
    return builtin_model("weibull", [3])


@pytest.fixture(scope="session")
def expexp():
    return builtin_model("expexp")


# ---------------------------------------------------------------------------
# closed-form references (mpmath)

def expexp_log_phi(t, dps=50):
    """log Phi for p(x) = c exp(-e^{x-1}) on x > 0:  log c + t + log Gamma(t, 1/e)."""
    with mpmath.workdps(dps):
        c = 1 / mpmath.e1(mpmath.exp(-1))
        t = mpmath.mpf(t)
        return mpmath.log(c) + t + mpmath.log(mpmath.gammainc(t, mpmath.exp(-1)))


def weibull2_log_phi(t, dps=50):
    """log Phi for p(x) = 2x exp(-x^2):  log(1 + (sqrt(pi) t/2) e^{t^2/4} (1 + erf(t/2)))."""
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        return mpmath.log(1 + mpmath.sqrt(mpmath.pi) * t / 2 * mpmath.exp(t * t / 4)
                          * (1 + mpmath.erf(t / 2)))


def cumulants(log_phi_fn, t, n=6, dps=60):
    """kappa_1..kappa_n by high-precision differentiation of log Phi."""
    with mpmath.workdps(dps):
        # pass the working precision through so mpmath.diff can raise it
        f = lambda s: log_phi_fn(s, mpmath.mp.dps)  # noqa: E731
        return [float(mpmath.diff(f, mpmath.mpf(t), k)) for k in range(1, n + 1)]


def central_from_cumulants(k):
    k1, k2, k3, k4, k5, k6 = k
    return {
        2: k2,
        3: k3,
        4: k4 + 3 * k2**2,
        5: k5 + 10 * k3 * k2,
        6: k6 + 15 * k4 * k2 + 10 * k3**2 + 15 * k2**3,
    }


def rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


__all__ = ["record_criterion", "expexp_log_phi", "weibull2_log_phi", "cumulants",
           "central_from_cumulants", "rel", "math"]
