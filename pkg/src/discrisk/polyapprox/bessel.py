r"""Modified Bessel functions of the first kind for integer order.

Evaluated from the power series

.. math::
    I_k(z) = \sum_{p \ge 0} \frac{(z/2)^{2p+k}}{p!\,(p+k)!}

with every term formed in log space, so large orders and arguments neither
overflow nor underflow before the final exponentiation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from ..errors import DomainError

_DIRECT_MAX_Z = 700.0


def _log_terms(k: int, z: float) -> np.ndarray:
    # terms peak near p0 with spread ~ sqrt(z)/2; 10 spreads puts the rest below 1e-16
    p0 = 0.5 * (math.hypot(k, z) - k)
    top = int(math.ceil(p0 + 10.0 * math.sqrt(z) + 40.0))
    p = np.arange(top + 1, dtype=float)
    return (2.0 * p + k) * math.log(z / 2.0) - gammaln(p + 1.0) - gammaln(p + k + 1.0)


def log_bessel_i(k: int, z: float) -> float:
    """``log I_k(z)`` for integer ``k >= 0`` and ``z > 0``."""
    if k < 0 or int(k) != k:
        raise DomainError(f"order must be a nonnegative integer, got {k}")
    if z < 0:
        raise DomainError(f"argument must be nonnegative, got {z}")
    if z == 0:
        return 0.0 if k == 0 else -math.inf
    t = _log_terms(int(k), float(z))
    m = float(t.max())
    return m + math.log(math.fsum(np.exp(t - m).tolist()))


def bessel_i(k: int, z: float) -> float:
    """``I_k(z)``; use :func:`log_bessel_i` or :func:`bessel_i_scaled` beyond ``z = 700``."""
    if z > _DIRECT_MAX_Z:
        raise DomainError(f"I_k(z) overflows for z > {_DIRECT_MAX_Z}; use log_bessel_i")
    return math.exp(log_bessel_i(k, z))


def bessel_i_scaled(k: int, z: float) -> float:
    """``exp(-z) I_k(z)``."""
    if z == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(log_bessel_i(k, z) - z)


def bessel_lower_bound(k: int, z: float) -> float:
    """Lower bound ``exp(-k^2/(2z)) / (2 e^4 (1+(k/z)^2)^(1/4) sqrt(z))`` on ``exp(-z) I_k(z)``.

    Valid when ``z > 8 sqrt(1 + (k/z)^2)``.
    """
    if not z > 0:
        raise DomainError(f"argument must be positive, got {z}")
    ratio2 = (k / z) ** 2
    if not z > 8.0 * math.sqrt(1.0 + ratio2):
        raise DomainError(f"bound requires z > 8 sqrt(1 + (k/z)^2); got k={k}, z={z}")
    return math.exp(-k * k / (2.0 * z)) / (2.0 * math.e**4 * (1.0 + ratio2) ** 0.25 * math.sqrt(z))
