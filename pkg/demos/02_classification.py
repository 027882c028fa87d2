"""Sorting densities into the two supported tail regimes.

The large-t equivalents hold when h = g' is either regularly varying with a
positive index (a power law times a slowly varying factor), or rapidly
varying with a slowly varying inverse psi.  `classify` estimates the index
from a log-log fit of h, then checks the side conditions on the Karamata
representation on numerical grids.

This script classifies a few models, including two that must be rejected:
a linear g (h constant, no saddlepoint) and an h whose log-derivative
oscillates forever.

Run:  python demos/02_classification.py
"""

import numpy as np

from tiltmoments import builtin_model, check_case1_conditions, classify, model_from_strings


class Oscillating:
    """h(x) = x (2 + sin log x): index 1 on average, but epsilon(x) never settles."""

    @staticmethod
    def h(x):
        return x * (2 + np.sin(np.log(x)))

    def h_derivatives(self, x):
        s, c = np.sin(np.log(x)), np.cos(np.log(x))
        return self.h(x), 2 + s + c, (c - s) / x, -2 * c / x**2


def show(model):
    cls = classify(model)
    extra = ""
    if cls.beta is not None:
        extra = f"beta = {cls.beta:.5f} +/- {cls.beta_stderr:.1e}"
        if cls.theta is not None:
            extra += f", theta = {cls.theta:.3f}"
    print(f"{model.label:>28}: {cls.kind.value:<17} {extra} {cls.note}")


if __name__ == "__main__":
    for k in (1.5, 2, 3, 4):
        show(builtin_model("weibull", [k]))
    show(builtin_model("expexp"))
    show(model_from_strings("exp(x^2)", label="g = exp(x^2)"))
    show(model_from_strings("x^3/3 + x - 2*log(x)", label="g = x^3/3 + x - 2 log x"))
    show(model_from_strings("x", label="g = x"))

    print("\nOscillating h = x (2 + sin log x), checked as if beta = 1:")
    for rec in check_case1_conditions(Oscillating(), 1.0):
        print(f"  {rec.label:<16} {rec.verdict.value:<16} passed={rec.passed}")
