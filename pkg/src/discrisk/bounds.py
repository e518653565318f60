"""Closed-form risk bounds and exact model moments.

Upper bounds on the (normalised) mean squared error of the series
estimators, their limits of predictability, and the minimax lower-bound
curve. Universal constants that are only known to exist are caller
parameters defaulting to 1.

The ``expected_*`` helpers evaluate moments of the Poisson abundance model
for a known vector of cell probabilities; they are the ingredients of the
bounds and serve as oracles in simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .smoothing import (
    SmoothingSpec,
    binomial2_log_argument,
    coefficients,
    expected_weight,
    optimal_binomial_x0,
    optimal_poisson_beta,
)

_LOG3 = math.log(3.0)


@dataclass(frozen=True)
class BoundCurve:
    kind: str
    points: list[tuple[float, float, float]]  # (lambda, n, value), sorted by lambda then n
    constants: dict = field(default_factory=dict)


def j_star(lam: float) -> int:
    """Index of the largest coefficient ``(j+1) lam^j`` when ``lam < 1``."""
    if not 0 < lam < 1:
        raise DomainError(f"j* is defined for 0 < lambda < 1, got {lam}")
    return max(math.floor((2.0 * lam - 1.0) / (1.0 - lam)), 0)


def psi(lam: float) -> float:
    """Largest coefficient magnitude ``max_j (j+1) lam^j`` for ``lam < 1``.

    The ratio of consecutive coefficients exceeds 1 up to
    ``(2 lam - 1)/(1 - lam)``, so the maximum sits at ``j_star`` or
    ``j_star + 1``; the two coincide in value when that ratio is an integer.
    """
    j = j_star(lam)
    return max((j + 1) * lam**j, (j + 2) * lam ** (j + 1))


def variance_bound_lt1(lam: float, e_zbar1: float, e_z1_pop: float) -> float:
    """Variance bound ``psi(lam)^2 E[Zbar_1] - E[Z_1(N+M)]/(lam+1)`` for ``lam < 1``."""
    if not 0 < lam < 1:
        raise DomainError(f"the variance bound needs 0 < lambda < 1, got {lam}")
    return psi(lam) ** 2 * e_zbar1 - e_z1_pop / (lam + 1.0)


def _check_smoothed_domain(lam: float, n: float):
    if lam < 1:
        raise DomainError(f"smoothed-estimator bounds need lambda >= 1, got {lam}")
    if n <= 2 * lam - 1:
        raise DomainError(f"need n > 2*lambda - 1 = {2 * lam - 1}, got n = {n}")


def poisson_constant(lam: float) -> float:
    """``A(lam) = 2 lam / (2 lam - 1)^(1 - 1/(2 lam))``."""
    if lam < 1:
        raise DomainError(f"A(lambda) is defined for lambda >= 1, got {lam}")
    return 2.0 * lam / (2.0 * lam - 1.0) ** (1.0 - 1.0 / (2.0 * lam))


def mse_bound_poisson(lam: float, n: float, beta: float) -> float:
    """``e^(-2 beta) n^2 + n e^(2 beta (2 lam - 1))``."""
    _check_smoothed_domain(lam, n)
    return math.exp(-2.0 * beta) * n * n + n * math.exp(2.0 * beta * (2.0 * lam - 1.0))


def nmse_bound_poisson(lam: float, n: float) -> float:
    """``A(lam) / n^(1/(2 lam))``, the normalised bound at the optimal ``beta``."""
    _check_smoothed_domain(lam, n)
    return poisson_constant(lam) / n ** (1.0 / (2.0 * lam))


def mse_bound_binomial2(lam: float, n: float, x0: int) -> float:
    """MSE bound for Binomial(x0, 2/(lam+2)) smoothing."""
    _check_smoothed_domain(lam, n)
    r = lam / (lam + 2.0)
    b = lam / (2.0 * (lam + 1.0))
    return n * r ** (2 * x0) * (3.0 ** (10.0 * x0 / 3.0) + n * b * b)


def binomial2_exponent(lam: float) -> float:
    """Rate exponent ``3 log_3(1 + 2/lam) / 5``."""
    return 3.0 * math.log1p(2.0 / lam) / (5.0 * _LOG3)


def binomial2_constant(lam: float) -> float:
    """``C(lam)``: the normalised Binomial bound times ``n`` to the rate exponent.

    Obtained by substituting the unfloored optimal ``x0`` into the MSE
    bound, which removes every dependence on ``n`` except the rate.
    """
    if lam < 1:
        raise DomainError(f"C(lambda) is defined for lambda >= 1, got {lam}")
    a = binomial2_log_argument(lam, 1)
    b = lam / (2.0 * (lam + 1.0))
    return a ** (-binomial2_exponent(lam)) * (a + b * b)


def nmse_bound_binomial2(lam: float, n: float) -> float:
    _check_smoothed_domain(lam, n)
    return binomial2_constant(lam) / n ** binomial2_exponent(lam)


@lru_cache(maxsize=None)
def sup_constant(kind: str) -> float:
    """``max_{lam >= 1}`` of ``A(lam)`` (``kind="poisson"``) or ``C(lam)`` (``"binomial2"``)."""
    fn = {"poisson": poisson_constant, "binomial2": binomial2_constant}[kind]
    grid = np.exp(np.linspace(0.0, math.log(1e6), 2001))
    vals = np.array([fn(x) for x in grid])
    i = int(np.argmax(vals))
    lo, hi = math.log(grid[max(i - 1, 0)]), math.log(grid[min(i + 1, grid.size - 1)])
    res = minimize_scalar(lambda t: -fn(math.exp(t)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(vals[i]), -float(res.fun))


def predictability_limit(kind: str, delta: float, constant: float | None = None) -> float:
    """Asymptotic coefficient of ``log n`` in the largest admissible ``lam``.

    ``constant`` defaults to :func:`sup_constant` for ``kind``.
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if kind not in ("poisson", "binomial2"):
        raise DomainError(f"unknown smoothing kind {kind!r}")
    c = sup_constant(kind) if constant is None else constant
    log_ratio = math.log(c / delta)
    if log_ratio <= 0:
        raise DomainError(f"delta = {delta} must be below the constant {c}; the limit is unbounded")
    if kind == "poisson":
        return 1.0 / (2.0 * log_ratio)
    return 6.0 / (5.0 * _LOG3 * log_ratio)


def minimax_lower_bound(lam: float, n: float, K: float = 1.0) -> float:
    """Lower bound on the minimax normalised risk, valid when ``1 + lam > e^2``."""
    if not lam + 1.0 > math.e**2:
        raise DomainError(f"the minimax lower bound assumes 1 + lambda > e^2, got lambda = {lam}")
    if n < 3:
        raise DomainError(f"need n >= 3, got {n}")
    log_n = math.log(n)
    if lam + 1.0 > log_n:
        return K
    base = math.sqrt(log_n) / (n * (1.0 + lam))
    return K * (1.0 + lam) / log_n * base ** (math.e**2 / (1.0 + lam))


def rate_lower_bound(lam: float, n: float, c: float = 1.0, c_prime: float = 1.0) -> float:
    """Rate form ``c / n^(c'/lam)`` of the minimax lower bound."""
    if not lam + 1.0 > math.e**2:
        raise DomainError(f"the rate bound assumes 1 + lambda > e^2, got lambda = {lam}")
    return c * n ** (-c_prime / lam)


# Model moments for known cell probabilities -----------------------------------


def expected_z(p, n: float, i: int) -> float:
    """``E[Z_i] = sum_j e^(-n p_j) (n p_j)^i / i!``."""
    mu = n * np.asarray(p, dtype=float)
    return float(np.sum(stats.poisson.pmf(i, mu)))


def expected_zbar1(p, n: float) -> float:
    """Expected number of occupied cells."""
    mu = n * np.asarray(p, dtype=float)
    return float(np.sum(-np.expm1(-mu)))


def expected_tau1(p, n: float, lam: float) -> float:
    """``E[tau_1] = sum_j n p_j e^(-(1+lam) n p_j)``."""
    mu = n * np.asarray(p, dtype=float)
    return float(np.sum(mu * np.exp(-(1.0 + lam) * mu)))


def expected_z1_population(p, n: float, lam: float) -> float:
    """Expected number of population uniques, population mean size ``(1+lam) n``."""
    mu = (1.0 + lam) * n * np.asarray(p, dtype=float)
    return float(np.sum(mu * np.exp(-mu)))


def expected_smoothed(p, n: float, lam: float, spec: SmoothingSpec) -> float:
    """``E[sum_i c_i Z_{i+1}]`` for the damped coefficients of ``spec``."""
    mu = n * np.asarray(p, dtype=float)
    top = float(mu.max()) if mu.size else 0.0
    horizon = int(math.ceil(top + 12.0 * math.sqrt(top + 1.0) + 40.0))
    c = coefficients(spec, lam, horizon).values()
    i = np.arange(horizon + 1)
    ez = stats.poisson.pmf(i[:, None] + 1, mu[None, :]).sum(axis=1)
    return math.fsum((c * ez).tolist())


def smoothed_bias(p, n: float, lam: float, spec: SmoothingSpec) -> float:
    return expected_smoothed(p, n, lam, spec) - expected_tau1(p, n, lam)


def mse_bound_smoothed(p, n: float, lam: float, spec: SmoothingSpec) -> float:
    """Bias squared plus the variance bound for a known ``p``."""
    w = expected_weight(spec, lam)
    var = w * w * expected_zbar1(p, n) - expected_z1_population(p, n, lam) / (lam + 1.0)
    return smoothed_bias(p, n, lam, spec) ** 2 + var


def bound_curves(lams, ns, K: float = 1.0) -> list[BoundCurve]:
    """Evaluate every bound on a ``lam x n`` grid (lambda >= 1)."""
    lams = sorted(float(x) for x in lams)
    ns = sorted(float(x) for x in ns)
    curves = {k: [] for k in ("nmse_poisson", "nmse_binomial2", "mse_poisson", "mse_binomial2",
                              "minimax_lower")}
    for lam in lams:
        for n in ns:
            if n <= 2 * lam - 1:
                continue
            curves["nmse_poisson"].append((lam, n, nmse_bound_poisson(lam, n)))
            curves["nmse_binomial2"].append((lam, n, nmse_bound_binomial2(lam, n)))
            beta = optimal_poisson_beta(lam, int(n))
            curves["mse_poisson"].append((lam, n, mse_bound_poisson(lam, n, beta)))
            x0 = optimal_binomial_x0(lam, int(n))
            curves["mse_binomial2"].append((lam, n, mse_bound_binomial2(lam, n, x0)))
            if lam + 1.0 > math.e**2 and n >= 3:
                curves["minimax_lower"].append((lam, n, minimax_lower_bound(lam, n, K)))
    return [
        BoundCurve(kind, pts, {"K": K} if kind == "minimax_lower" else {})
        for kind, pts in curves.items()
    ]
