"""Polynomial approximation lab: Bessel functions, Remez exchange and lower bounds."""

from .bessel import bessel_i, bessel_i_scaled, bessel_lower_bound, log_bessel_i
from .lab import (
    AppendixReport,
    PolyApproxProblem,
    bessel_integral_bound,
    theorem_branch,
    theorem_formula,
    verify_appendix_bounds,
)
from .remez import BestApproxResult, ExpDecay, remez_best_approx

__all__ = [
    "AppendixReport",
    "BestApproxResult",
    "ExpDecay",
    "PolyApproxProblem",
    "bessel_i",
    "bessel_i_scaled",
    "bessel_integral_bound",
    "bessel_lower_bound",
    "log_bessel_i",
    "remez_best_approx",
    "theorem_branch",
    "theorem_formula",
    "verify_appendix_bounds",
]
