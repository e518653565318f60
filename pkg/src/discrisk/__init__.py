"""Estimate how many sample uniques are also population uniques.

The package bundles frequency-of-frequencies profiles, series estimators
with random truncation, baseline estimators, closed-form risk bounds, a
polynomial approximation lab and a Monte Carlo harness.
"""

from .errors import ConvergenceError, DiscriskError, DomainError, NumericalError
from .estimators import EstimateReport, estimate, estimate_all
from .profile import CellCounts, FrequencyProfile, PairedCounts, profile_from_counts, profile_from_records
from .smoothing import SmoothingSpec

__version__ = "0.1.0"

__all__ = [
    "CellCounts",
    "ConvergenceError",
    "DiscriskError",
    "DomainError",
    "EstimateReport",
    "FrequencyProfile",
    "NumericalError",
    "PairedCounts",
    "SmoothingSpec",
    "estimate",
    "estimate_all",
    "profile_from_counts",
    "profile_from_records",
]
