"""Estimators of the number of sample uniques that are population uniques.

All estimators are functions of a :class:`~discrisk.profile.FrequencyProfile`.
``lam`` is the ratio of the unobserved population size to the sample size,
and ``n_bar`` is the population size used by the baseline estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaln

from . import bounds
from .errors import ConvergenceError, DomainError, NumericalError
from .profile import FrequencyProfile
from .smoothing import (
    SmoothingSpec,
    coefficients,
    optimal_binomial_x0,
    optimal_poisson_beta,
)

ESTIMATORS = ("unbiased", "binomial2", "poisson", "naive", "dirichlet", "bethlehem", "skinner")


@dataclass(frozen=True)
class EstimateReport:
    name: str
    value: float
    lam: float
    z1: int
    smoothing: SmoothingSpec | None = None
    fitted: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    @property
    def clamped(self) -> float:
        """The estimate clipped to ``[0, Z_1]``."""
        return min(max(self.value, 0.0), float(self.z1))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "clamped": self.clamped,
            "lambda": self.lam,
            "smoothing": None if self.smoothing is None else self.smoothing.to_json(),
            "fitted": dict(self.fitted),
            "bounds": dict(self.bounds),
        }


@dataclass(frozen=True)
class PoissonGammaFit:
    """Gamma(alpha, scale=beta) prior on cell probabilities with ``alpha*beta*k_hat = 1``."""

    alpha: float
    beta: float
    k_hat: float
    frame: str = "population"
    at_boundary: bool = False


def _profile_arrays(profile: FrequencyProfile) -> tuple[np.ndarray, np.ndarray]:
    ys = np.fromiter(profile.z.keys(), dtype=np.int64, count=len(profile.z))
    zs = np.fromiter(profile.z.values(), dtype=np.float64, count=len(profile.z))
    return ys, zs


def _series(profile: FrequencyProfile, coef: np.ndarray) -> float:
    return math.fsum(float(coef[i - 1]) * c for i, c in profile.z.items() if i - 1 < coef.size)


def tau1_unbiased(profile: FrequencyProfile, lam: float) -> float:
    """Unbiased series estimator, usable only when ``lam < 1``."""
    if not 0 < lam < 1:
        raise DomainError(f"the unbiased estimator needs 0 < lambda < 1, got {lam}")
    if profile.k == 0:
        return 0.0
    i = np.arange(profile.max_frequency)
    coef = (i + 1) * (-lam) ** i
    return _series(profile, coef)


def tau1_smoothed(profile: FrequencyProfile, lam: float, spec: SmoothingSpec) -> float:
    """Series estimator with coefficients damped by ``P(L >= i)``."""
    if spec.kind == "none":
        if lam >= 1:
            raise DomainError("lambda >= 1 needs Poisson or Binomial smoothing")
        return tau1_unbiased(profile, lam)
    if profile.k == 0:
        return 0.0
    seq = coefficients(spec, lam, profile.max_frequency - 1)
    terms = []
    for i, c in profile.z.items():
        s = seq.sign[i - 1]
        if s == 0:
            continue
        log_term = seq.log_abs[i - 1] + math.log(c)
        if log_term > 709.0:
            raise NumericalError(f"series term {i - 1} overflows (log magnitude {log_term:.1f})")
        terms.append(float(s) * math.exp(seq.log_abs[i - 1]) * c)
    return math.fsum(terms)


def tau1_naive(profile: FrequencyProfile, n_bar: int) -> float:
    """Sample uniques scaled by the sampling fraction."""
    if n_bar < profile.n or n_bar <= 0:
        raise DomainError(f"population size {n_bar} smaller than sample size {profile.n}")
    return profile[1] * profile.n / n_bar


def dirichlet_k_expected(theta: float, n: int, convention: str = "shifted") -> float:
    """Expected number of cells under a Dirichlet process, summed over the convention's range."""
    start = 1 if convention == "shifted" else 0
    j = np.arange(start, n, dtype=float)
    return float(np.sum(theta / (theta + j)))


def fit_dirichlet_theta(profile: FrequencyProfile, convention: str = "shifted") -> float:
    """Solve ``K_n = sum_j theta/(theta+j)`` for the concentration ``theta``.

    ``convention="shifted"`` sums over ``j = 1..n-1``; ``"standard"`` over
    ``j = 0..n-1``.
    """
    if convention not in ("shifted", "standard"):
        raise DomainError(f"unknown theta convention {convention!r}")
    n, k = profile.n, profile.k
    if k < 1:
        raise DomainError("cannot fit theta on an empty profile")
    sup = n - 1 if convention == "shifted" else n
    inf = 0 if convention == "shifted" else 1
    if k >= sup:
        raise DomainError(f"K_n = {k} reaches the supremum {sup}; theta is unbounded")
    if k <= inf:
        raise DomainError(f"K_n = {k} forces theta = 0")

    def f(log_theta):
        return dirichlet_k_expected(math.exp(log_theta), n, convention) - k

    lo, hi = 0.0, 0.0
    for _ in range(400):
        if f(lo) < 0:
            break
        lo -= 2.0
    for _ in range(400):
        if f(hi) > 0:
            break
        hi += 2.0
    if not (f(lo) < 0 < f(hi)):
        raise ConvergenceError("could not bracket the Dirichlet concentration")
    root = brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(root)


def tau1_dirichlet(
    profile: FrequencyProfile, n_bar: int, theta: float | None = None, convention: str = "shifted"
) -> float:
    if n_bar < profile.n:
        raise DomainError(f"population size {n_bar} smaller than sample size {profile.n}")
    if profile[1] == 0:
        return 0.0
    if theta is None:
        theta = fit_dirichlet_theta(profile, convention)
    return profile[1] * (profile.n + theta - 1.0) / (n_bar + theta - 1.0)


def _pg_loglik(log_beta: float, ys, zs, k_hat: float, rate: float, cum_cache: dict) -> float:
    beta = math.exp(log_beta)
    alpha = 1.0 / (k_hat * beta)
    mb = rate * beta
    l1 = math.log1p(mb)
    ymax = int(ys[-1])
    # log Gamma(alpha+y) - log Gamma(alpha) = sum_{t<y} log(alpha+t), exact for huge alpha
    cum = np.concatenate(([0.0], np.cumsum(np.log(alpha + np.arange(ymax)))))
    log_pmf = cum[ys] - cum_cache["lgy1"] + ys * (math.log(mb) - l1) - alpha * l1
    log_nonzero = math.log(-math.expm1(-alpha * l1))
    return float(np.dot(zs, log_pmf - log_nonzero))


def fit_poisson_gamma(
    profile: FrequencyProfile,
    n_bar: int,
    *,
    frame: str = "population",
    k_hat: float | None = None,
) -> PoissonGammaFit:
    """Maximum-likelihood Poisson-Gamma fit with ``alpha = 1/(k_hat beta)``.

    Observed frequencies are modelled as zero-truncated negative binomial
    counts. ``frame="population"`` uses Poisson rate ``n_bar * p`` per cell,
    ``frame="sample"`` uses ``n * p``. The search runs over ``log beta``; a
    maximum at the small-``beta`` end is the Poisson limit and is returned
    with ``at_boundary=True``.
    """
    if frame not in ("population", "sample"):
        raise DomainError(f"unknown likelihood frame {frame!r}")
    z1 = profile[1]
    if k_hat is None:
        if z1 == 0:
            raise DomainError("no sample uniques: K_hat = n_bar*K_n/Z_1 is undefined")
        k_hat = n_bar * profile.k / z1
    if not k_hat > 0:
        raise DomainError(f"k_hat must be positive, got {k_hat}")
    rate = float(n_bar if frame == "population" else profile.n)
    ys, zs = _profile_arrays(profile)
    cache = {"lgy1": gammaln(ys + 1.0)}
    lo, hi = math.log(1e-12 / rate), math.log(1e12 / rate)
    grid = np.linspace(lo, hi, 241)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ll = np.array([_pg_loglik(g, ys, zs, k_hat, rate, cache) for g in grid])
    if not np.any(np.isfinite(ll)):
        raise ConvergenceError("Poisson-Gamma likelihood is not finite anywhere on the search grid")
    i = int(np.nanargmax(np.where(np.isfinite(ll), ll, -np.inf)))
    if i == grid.size - 1:
        raise ConvergenceError("Poisson-Gamma likelihood increases without bound in beta")
    at_boundary = i == 0
    if at_boundary:
        log_beta = grid[0]
    else:
        res = minimize_scalar(
            lambda g: -_pg_loglik(g, ys, zs, k_hat, rate, cache),
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": 1e-10, "maxiter": 500},
        )
        if not res.success:
            raise ConvergenceError(f"Poisson-Gamma fit did not converge: {res.message}")
        log_beta = float(res.x)
    beta = math.exp(log_beta)
    return PoissonGammaFit(1.0 / (k_hat * beta), beta, float(k_hat), frame, at_boundary)


def tau1_bethlehem(profile: FrequencyProfile, n_bar: int, fit: PoissonGammaFit | None = None) -> float:
    """Sample share ``n (1 + n_bar beta)^-(1+alpha)`` of the expected population uniques."""
    if fit is None:
        fit = fit_poisson_gamma(profile, n_bar)
    return profile.n * math.exp(-(1.0 + fit.alpha) * math.log1p(n_bar * fit.beta))


def tau1_skinner(profile: FrequencyProfile, n_bar: int, fit: PoissonGammaFit | None = None) -> float:
    if fit is None:
        fit = fit_poisson_gamma(profile, n_bar)
    log_ratio = math.log1p(n_bar * fit.beta) - math.log1p(profile.n * fit.beta)
    return profile.k * math.exp(-(1.0 + fit.alpha) * log_ratio)


def default_smoothing(kind: str, lam: float, n: int) -> SmoothingSpec:
    """Smoothing law with the closed-form optimal parameter for ``(lam, n)``."""
    if kind == "poisson":
        return SmoothingSpec.poisson(optimal_poisson_beta(lam, n))
    if kind == "binomial2":
        return SmoothingSpec.binomial2(optimal_binomial_x0(lam, n), lam)
    raise DomainError(f"no optimal parameter for smoothing {kind!r}")


def estimate(
    name: str,
    profile: FrequencyProfile,
    lam: float,
    n_bar: int | None = None,
    *,
    smoothing: SmoothingSpec | None = None,
    n_nominal: int | None = None,
    theta_convention: str = "shifted",
    pg_frame: str = "population",
    pg_fit: PoissonGammaFit | None = None,
) -> EstimateReport:
    """Run one estimator and package the result.

    ``n_nominal`` is the sample size used to set optimal smoothing
    parameters and bound values; it defaults to the observed ``profile.n``.
    """
    n_nom = n_nominal if n_nominal is not None else profile.n
    z1 = profile[1]
    if name == "unbiased":
        value = tau1_unbiased(profile, lam)
        return EstimateReport(name, value, lam, z1, SmoothingSpec.none(), bounds={"psi": bounds.psi(lam)})
    if name in ("poisson", "binomial2"):
        spec = smoothing if smoothing is not None else default_smoothing(name, lam, n_nom)
        value = tau1_smoothed(profile, lam, spec)
        extra = {}
        if lam >= 1 and n_nom > 2 * lam - 1:
            if spec.kind == "poisson":
                extra = {
                    "mse_bound": bounds.mse_bound_poisson(lam, n_nom, spec.beta),
                    "nmse_bound": bounds.nmse_bound_poisson(lam, n_nom),
                }
            elif spec.kind == "binomial" and name == "binomial2":
                extra = {
                    "mse_bound": bounds.mse_bound_binomial2(lam, n_nom, spec.x0),
                    "nmse_bound": bounds.nmse_bound_binomial2(lam, n_nom),
                }
        return EstimateReport(name, value, lam, z1, spec, bounds=extra)
    if n_bar is None:
        raise DomainError(f"estimator {name!r} needs the population size n_bar")
    if name == "naive":
        return EstimateReport(name, tau1_naive(profile, n_bar), lam, z1)
    if name == "dirichlet":
        theta = fit_dirichlet_theta(profile, theta_convention) if z1 else float("nan")
        value = tau1_dirichlet(profile, n_bar, theta if z1 else None, theta_convention)
        return EstimateReport(name, value, lam, z1, fitted={"theta": theta})
    if name in ("bethlehem", "skinner"):
        fit = pg_fit if pg_fit is not None else fit_poisson_gamma(profile, n_bar, frame=pg_frame)
        fn = tau1_bethlehem if name == "bethlehem" else tau1_skinner
        fitted = {"alpha": fit.alpha, "beta": fit.beta, "k_hat": fit.k_hat}
        return EstimateReport(name, fn(profile, n_bar, fit), lam, z1, fitted=fitted)
    raise DomainError(f"unknown estimator {name!r}")


def applicable_estimators(lam: float) -> tuple[str, ...]:
    """The six estimators that apply at ``lam``: the unbiased one replaces both smoothed ones below 1."""
    if lam < 1:
        return ("unbiased", "naive", "dirichlet", "bethlehem", "skinner")
    return ("binomial2", "poisson", "naive", "dirichlet", "bethlehem", "skinner")


def estimate_all(profile: FrequencyProfile, lam: float, n_bar: int, **kwargs) -> list[EstimateReport]:
    """All applicable estimators; the Poisson-Gamma fit is shared by Bethlehem and Skinner."""
    names = applicable_estimators(lam)
    if "pg_fit" not in kwargs:
        kwargs["pg_fit"] = fit_poisson_gamma(profile, n_bar, frame=kwargs.get("pg_frame", "population"))
    return [estimate(name, profile, lam, n_bar, **kwargs) for name in names]
