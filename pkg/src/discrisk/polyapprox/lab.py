"""Lower bounds on the best approximation error of a decaying exponential.

The function ``g(x) = exp(-2 B x)`` on ``[1/xi, 1]`` is an affine image of
``gamma(t) = exp(-C (t + 1))`` on ``[-1, 1]`` with ``C = B (1 - 1/xi)``, so

    E_L(g, [1/xi, 1]) = exp(-2 B / xi) E_L(gamma, [-1, 1]).

This module computes ``E_L`` with the exchange algorithm and compares it with
the Bessel-function lower bound and the asymptotic two-branch formula.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import mpmath

from ..errors import DomainError
from .bessel import log_bessel_i
from .remez import BestApproxResult, ExpDecay, remez_best_approx

DEFAULT_C0 = 1.0 / math.e


@dataclass(frozen=True)
class PolyApproxProblem:
    """Approximation of ``exp(-2 B x)`` on ``[1/xi, 1]`` by degree-``L`` polynomials."""

    xi: float
    B: float
    L: int
    S: int | None = None  # integer population size the problem was built from, if any

    def __post_init__(self):
        if not self.xi > 1 or not math.isfinite(self.xi):
            raise DomainError(f"xi must exceed 1, got {self.xi}")
        if not self.B > 0 or not math.isfinite(self.B):
            raise DomainError(f"B must be positive, got {self.B}")
        if int(self.L) != self.L or self.L < 0:
            raise DomainError(f"L must be a nonnegative integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))

    @property
    def C(self) -> float:
        return self.B * (1.0 - 1.0 / self.xi)

    @property
    def interval(self) -> tuple[float, float]:
        return (1.0 / self.xi, 1.0)

    def g(self) -> ExpDecay:
        return ExpDecay(2.0 * self.B, 0.0)

    def gamma(self) -> ExpDecay:
        return ExpDecay(self.C, 1.0)

    @classmethod
    def from_model(cls, n: float, lam: float, L: int, *, c0: float = DEFAULT_C0,
                   B: float | None = None) -> PolyApproxProblem:
        """Build the problem attached to sample size ``n`` and ratio ``lam``.

        ``xi = (2 c0 / e) min((1+lam) log n, log^2 n)``, ``S`` is the
        smallest integer ``>= n (1+lam)`` and ``B`` defaults to
        ``n (1+lam) xi / (2 S)``.
        """
        if not n > 1:
            raise DomainError(f"n must exceed 1, got {n}")
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam}")
        if not c0 > 0:
            raise DomainError(f"c0 must be positive, got {c0}")
        log_n = math.log(n)
        xi = (2.0 * c0 / math.e) * min((1.0 + lam) * log_n, log_n * log_n)
        m = n * (1.0 + lam)
        S = math.ceil(m)
        if B is None:
            B = m * xi / (2.0 * S)
        else:
            lo, hi = xi / 2.0 / (1.0 + 1.0 / m), xi / 2.0
            if not lo * (1 - 1e-12) <= B <= hi * (1 + 1e-12):
                raise DomainError(f"B = {B} outside the admissible range [{lo}, {hi}]")
        return cls(xi=xi, B=B, L=L, S=S)


def eq19_terms(L: int, C: float) -> list[tuple[int, float]]:
    """``(K, log(K e^{-C} I_{L+4K}(C)))`` for ``K = 1..ceil(C)``."""
    if not C > 0:
        raise DomainError(f"C must be positive, got {C}")
    top = max(1, math.ceil(C))
    return [(K, math.log(K) - C + log_bessel_i(L + 4 * K, C)) for K in range(1, top + 1)]


def bessel_integral_bound(L: int, C: float) -> tuple[float, int]:
    """``max_K K e^{-C} I_{L+4K}(C)`` over ``K = 1..ceil(C)`` and the maximising ``K``."""
    K, logv = max(eq19_terms(L, C), key=lambda kv: kv[1])
    return math.exp(logv), K


def theorem_branch(L: int, xi: float, zeta: float = 0.5) -> str:
    """``"flat"`` when ``L <= sqrt(xi/2)``, ``"decay"`` when ``L < zeta xi``, else ``"outside"``."""
    if L <= math.sqrt(xi / 2.0):
        return "flat"
    if L < zeta * xi:
        return "decay"
    return "outside"


def theorem_formula(L: int, xi: float) -> float:
    """Two-branch lower-bound shape for ``E_L(g)`` with the constant set to 1."""
    if L <= math.sqrt(xi / 2.0):
        return 1.0
    return math.sqrt(xi) * math.exp(-L * L / xi) / (L * (1.0 + (2.0 * L / xi) ** 2) ** 0.25)


@dataclass(frozen=True)
class AppendixReport:
    xi: float
    B: float
    C: float
    L: int
    S: int | None
    error_gamma: float
    error_g: float
    log_error_gamma: float
    eq19_bound: float
    eq19_argmax_K: int
    eq19_holds: bool
    eq19_holds_every_K: bool
    branch: str
    theorem_formula: float
    implied_K: float
    error_g_direct: float | None = None
    rescaling_rel_diff: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def _log_error(res: BestApproxResult) -> float:
    if res.error_mp is not None:
        return float(mpmath.log(res.error_mp)) if res.error_mp > 0 else -math.inf
    return math.log(res.error) if res.error > 0 else -math.inf


def verify_appendix_bounds(problem: PolyApproxProblem, *, zeta: float = 0.5,
                           check_rescaling: bool = False) -> AppendixReport:
    """Compute ``E_L`` and compare it with the Bessel and asymptotic lower bounds.

    With ``check_rescaling`` the approximation of ``g`` on ``[1/xi, 1]`` is also
    computed directly and compared with the rescaled ``E_L(gamma)``.
    """
    p = problem
    res = remez_best_approx(p.gamma(), (-1.0, 1.0), p.L)
    log_e = _log_error(res)
    terms = eq19_terms(p.L, p.C)
    K_best, log_bound = max(terms, key=lambda kv: kv[1])
    # relative slack for round-off when the two sides nearly coincide
    slack = 1e-9
    holds_every = all(log_e >= lv - slack for _, lv in terms)
    scale = math.exp(-2.0 * p.B / p.xi)
    error_g = scale * res.error
    formula = theorem_formula(p.L, p.xi)
    direct = rel = None
    if check_rescaling:
        direct = remez_best_approx(p.g(), p.interval, p.L).error
        rel = abs(direct - error_g) / error_g if error_g > 0 else abs(direct)
    return AppendixReport(
        xi=p.xi, B=p.B, C=p.C, L=p.L, S=p.S,
        error_gamma=res.error,
        error_g=error_g,
        log_error_gamma=log_e,
        eq19_bound=math.exp(log_bound),
        eq19_argmax_K=K_best,
        eq19_holds=log_e >= log_bound - slack,
        eq19_holds_every_K=holds_every,
        branch=theorem_branch(p.L, p.xi, zeta),
        theorem_formula=formula,
        implied_K=error_g / formula,
        error_g_direct=direct,
        rescaling_rel_diff=rel,
    )
