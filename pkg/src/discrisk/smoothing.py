"""Random truncation points for the alternating series estimator.

The series ``sum_i (-1)^i (i+1) lam^i Z_{i+1}`` has coefficients that grow
geometrically once ``lam >= 1``. Truncating it at an independent random
index ``L`` and averaging over ``L`` multiplies the ``i``-th coefficient by
``P(L >= i)``. This module holds the law of ``L``, its tail probabilities,
the damped coefficients (computed in log space) and the closed-form
parameter choices for Poisson and Binomial ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import DomainError

_LOG3 = math.log(3.0)


@dataclass(frozen=True)
class SmoothingSpec:
    """Law of the truncation index ``L``.

    Use the constructors :meth:`none`, :meth:`poisson`, :meth:`binomial`,
    :meth:`binomial2` and :meth:`euler` rather than building one directly.
    """

    kind: str
    beta: float | None = None
    x0: int | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind == "none":
            return
        if self.kind == "poisson":
            if self.beta is None or not self.beta > 0 or not math.isfinite(self.beta):
                raise DomainError(f"Poisson smoothing needs beta > 0, got {self.beta}")
        elif self.kind == "binomial":
            if self.x0 is None or int(self.x0) != self.x0 or self.x0 < 0:
                raise DomainError(f"Binomial smoothing needs integer x0 >= 0, got {self.x0}")
            if self.p is None or not 0 < self.p < 1:
                raise DomainError(f"Binomial smoothing needs 0 < p < 1, got {self.p}")
            object.__setattr__(self, "x0", int(self.x0))
        else:
            raise DomainError(f"unknown smoothing kind {self.kind!r}")

    @classmethod
    def none(cls) -> SmoothingSpec:
        return cls("none")

    @classmethod
    def poisson(cls, beta: float) -> SmoothingSpec:
        return cls("poisson", beta=float(beta))

    @classmethod
    def binomial(cls, x0: int, p: float) -> SmoothingSpec:
        return cls("binomial", x0=x0, p=float(p))

    @classmethod
    def binomial2(cls, x0: int, lam: float) -> SmoothingSpec:
        """Binomial ``L`` with success probability ``2/(lam+2)``."""
        return cls.binomial(x0, 2.0 / (lam + 2.0))

    @classmethod
    def euler(cls, x0: int, lam: float) -> SmoothingSpec:
        """Binomial ``L`` with success probability ``1/(lam+1)``.

        Equivalent to truncating the Euler transform of the series at
        ``x0``. No optimal ``x0`` is known for this law.
        """
        return cls.binomial(x0, 1.0 / (lam + 1.0))

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "poisson":
            out["beta"] = self.beta
        elif self.kind == "binomial":
            out.update(x0=self.x0, p=self.p)
        return out


@dataclass(frozen=True)
class CoefficientSeq:
    """Signed coefficients stored as ``sign * exp(log_abs)``."""

    log_abs: np.ndarray
    sign: np.ndarray

    def __len__(self):
        return self.log_abs.size

    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.sign * np.exp(self.log_abs)


def tail_probability(spec: SmoothingSpec, i: int) -> float:
    """``P(L >= i)`` evaluated directly from the probability mass function."""
    if i < 0:
        raise DomainError(f"tail index must be >= 0, got {i}")
    if i == 0 or spec.kind == "none":
        return 1.0
    if spec.kind == "poisson":
        return float(stats.poisson.sf(i - 1, spec.beta))
    x0, p = spec.x0, spec.p
    if i > x0:
        return 0.0
    return math.fsum(math.comb(x0, k) * p**k * (1 - p) ** (x0 - k) for k in range(i, x0 + 1))


def _log_pmf(spec: SmoothingSpec, horizon: int) -> np.ndarray:
    k = np.arange(horizon + 1, dtype=float)
    if spec.kind == "poisson":
        return k * math.log(spec.beta) - spec.beta - gammaln(k + 1)
    x0, p = spec.x0, spec.p
    k = k[: x0 + 1]
    return (
        gammaln(x0 + 1) - gammaln(k + 1) - gammaln(x0 - k + 1)
        + k * math.log(p) + (x0 - k) * math.log1p(-p)
    )


def log_tail(spec: SmoothingSpec, max_i: int) -> np.ndarray:
    """``log P(L >= i)`` for ``i = 0..max_i``; ``-inf`` where the tail is empty."""
    if spec.kind == "none":
        return np.zeros(max_i + 1)
    if spec.kind == "poisson":
        b = spec.beta
        horizon = int(math.ceil(max(max_i, b) + 20.0 * math.sqrt(b + 1.0) + 60.0))
    else:
        horizon = spec.x0
    lp = _log_pmf(spec, horizon)
    tail = np.logaddexp.accumulate(lp[::-1])[::-1]
    out = np.full(max_i + 1, -np.inf)
    m = min(max_i + 1, tail.size)
    out[:m] = tail[:m]
    out[0] = 0.0
    return out


def coefficients(spec: SmoothingSpec, lam: float, max_i: int) -> CoefficientSeq:
    """Damped series coefficients ``(-1)^i (i+1) lam^i P(L >= i)``, ``i = 0..max_i``."""
    if max_i < 0:
        raise DomainError(f"max_i must be >= 0, got {max_i}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    i = np.arange(max_i + 1)
    lt = log_tail(spec, max_i)
    log_abs = np.log1p(i) + i * math.log(lam) + lt
    sign = np.where(i % 2 == 0, 1, -1)
    sign = np.where(np.isneginf(lt), 0, sign)
    return CoefficientSeq(log_abs, sign.astype(np.int8))


def expected_weight(spec: SmoothingSpec, lam: float) -> float:
    """``E[(L+1) lam^L]``, the factor that bounds every damped coefficient."""
    if spec.kind == "none":
        raise DomainError("E[(L+1) lam^L] is infinite without smoothing")
    if spec.kind == "poisson":
        b = spec.beta
        return math.exp(b * (lam - 1.0)) * (1.0 + b * lam)
    x0, p = spec.x0, spec.p
    q = 1.0 - p + p * lam
    # E[lam^L] + E[L lam^L] for a Binomial(x0, p)
    return q**x0 + (x0 * p * lam * q ** (x0 - 1) if x0 > 0 else 0.0)


def optimal_poisson_beta(lam: float, n: int) -> float:
    """Poisson parameter ``log(n / (2 lam - 1)) / (4 lam)`` minimising the MSE bound."""
    if lam < 1:
        raise DomainError(f"optimal Poisson smoothing needs lambda >= 1, got {lam}")
    if n <= 2 * lam - 1:
        raise DomainError(f"need n > 2*lambda - 1 = {2 * lam - 1}, got n = {n}")
    return math.log(n / (2.0 * lam - 1.0)) / (4.0 * lam)


def binomial2_log_argument(lam: float, n: int) -> float:
    """Argument of ``log_3`` in the optimal Binomial truncation point."""
    denom = (lam + 1.0) * (lam * lam * (3.0 ** (10.0 / 3.0) - 1.0) - 4.0 * lam - 4.0)
    return n * lam * lam / denom


def optimal_binomial_x0(lam: float, n: int) -> int:
    """Optimal ``x0`` for Binomial(x0, 2/(lam+2)) smoothing.

    A nonpositive interior value (log argument in ``(0, 1]``) is clamped to
    ``x0 = 0``, which reduces the estimator to ``Z_1``.
    """
    if lam < 1:
        raise DomainError(f"optimal Binomial smoothing needs lambda >= 1, got {lam}")
    arg = binomial2_log_argument(lam, n)
    if not arg > 0:
        raise DomainError(f"log_3 argument {arg} is not positive for lambda={lam}, n={n}")
    return max(0, math.floor(0.3 * math.log(arg) / _LOG3))
