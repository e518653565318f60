"""Best uniform polynomial approximation by the Remez exchange algorithm.

The polynomial is represented in the Chebyshev basis of the interval mapped
onto ``[-1, 1]``. Arithmetic runs in float64 when the achievable error is
comfortably above round-off and in mpmath otherwise, with the working
precision chosen from a Chebyshev-coefficient estimate of the error.

In extended precision ``f`` receives :class:`mpmath.mpf` arguments and must
evaluate them without dropping to float (use ``mpmath.exp`` and friends, or
:class:`ExpDecay`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from ..errors import ConvergenceError, DomainError

MAX_DEGREE = 60
MAX_EXCHANGES = 100
_GOLDEN = 0.3819660112501051


@dataclass(frozen=True)
class ExpDecay:
    """``f(x) = exp(-rate * (x + shift))``, usable with floats and mpmath numbers."""

    rate: float
    shift: float = 0.0

    def __call__(self, x):
        if isinstance(x, mpmath.mpf):
            return mpmath.exp(-mpmath.mpf(self.rate) * (x + mpmath.mpf(self.shift)))
        return math.exp(-self.rate * (x + self.shift))


@dataclass(frozen=True)
class BestApproxResult:
    """Outcome of :func:`remez_best_approx`.

    Attributes
    ----------
    error : float
        ``E_L``, the uniform norm of the final residual.
    coeffs : numpy.ndarray
        Chebyshev coefficients of the best polynomial in the variable
        ``t = (2x - a - b) / (b - a)``.
    alternation_points : numpy.ndarray
        The ``L + 2`` points of the final reference, ascending in ``x``.
    residuals : numpy.ndarray
        ``f - p`` at the alternation points.
    interval : tuple of float
    degree : int
    iterations : int
    dps : int or None
        Decimal digits used by mpmath, or ``None`` for float64.
    """

    error: float
    coeffs: np.ndarray
    alternation_points: np.ndarray
    residuals: np.ndarray
    interval: tuple[float, float]
    degree: int
    iterations: int
    dps: int | None
    error_mp: object = None

    def __call__(self, x):
        a, b = self.interval
        t = (2.0 * np.asarray(x, dtype=float) - a - b) / (b - a)
        return np.polynomial.chebyshev.chebval(t, self.coeffs)

    def sign_changes(self) -> int:
        s = np.sign(self.residuals)
        return int(np.sum(s[1:] * s[:-1] < 0))


class _Arith:
    """Scalar operations for one working precision."""

    def __init__(self, dps: int | None):
        self.dps = dps
        if dps is None:
            self.num = float
            self.eps = 2.0**-52
            self.pi = math.pi
            self.cos = math.cos
        else:
            self.num = mpmath.mpf
            self.eps = mpmath.mpf(10) ** (-dps)
            self.pi = mpmath.pi
            self.cos = mpmath.cos
        self.sqrt_eps = self.eps**0.5

    def solve(self, rows, rhs):
        if self.dps is None:
            return [float(v) for v in np.linalg.solve(np.array(rows), np.array(rhs))]
        return list(mpmath.lu_solve(mpmath.matrix(rows), mpmath.matrix(rhs)))


def _cheb_row(t, n: int, one):
    row = [one, t][:n]
    while len(row) < n:
        row.append(2 * t * row[-1] - row[-2])
    return row


def _clenshaw(c, t):
    b1 = b2 = 0 * t
    for ck in reversed(c[1:]):
        b1, b2 = 2 * t * b1 - b2 + ck, b1
    return t * b1 - b2 + c[0]


def _root(fun, lo, hi, flo, fhi, tol):
    """Illinois false position on a sign-changing bracket."""
    side = 0
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = (lo * fhi - hi * flo) / (fhi - flo)
        if not lo < mid < hi:
            mid = (lo + hi) / 2
        fm = fun(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (fhi > 0):
            hi, fhi = mid, fm
            if side == -1:
                flo /= 2
            side = -1
        else:
            lo, flo = mid, fm
            if side == 1:
                fhi /= 2
            side = 1
    return (lo + hi) / 2


def _maximise(fun, lo, hi, tol_rel, num):
    """Brent's bounded scalar maximisation (golden section plus parabolic steps)."""
    g = num(_GOLDEN)
    x = w = v = lo + g * (hi - lo)
    fx = fw = fv = -fun(x)
    d = e = 0 * x
    for _ in range(500):
        mid = (lo + hi) / 2
        tol1 = tol_rel * abs(x) + tol_rel
        tol2 = 2 * tol1
        if abs(x - mid) <= tol2 - (hi - lo) / 2:
            break
        parabolic = False
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            if abs(p) < abs(q * e / 2) and q * (lo - x) < p < q * (hi - x):
                e, d = d, p / q
                u = x + d
                if u - lo < tol2 or hi - u < tol2:
                    d = tol1 if mid >= x else -tol1
                parabolic = True
        if not parabolic:
            e = (hi - x) if x < mid else (lo - x)
            d = g * e
        u = x + (d if abs(d) >= tol1 else (tol1 if d > 0 else -tol1))
        fu = -fun(u)
        if fu <= fx:
            if u < x:
                hi = x
            else:
                lo = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                lo = u
            else:
                hi = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, -fx


def _error_estimate(f, a: float, b: float, L: int, dps: int) -> tuple[float, float]:
    """``(|a_{L+1}| + |a_{L+2}|, max |f|)`` from a Chebyshev interpolant at ``dps`` digits."""
    m = L + 8
    with mpmath.workdps(dps):
        mid, half = mpmath.mpf(a + b) / 2, mpmath.mpf(b - a) / 2
        th = [mpmath.pi * (j + mpmath.mpf(1) / 2) / m for j in range(m)]
        vals = [f(mid + half * mpmath.cos(t)) for t in th]
        coef = []
        for k in (L + 1, L + 2):
            coef.append(2 * mpmath.fsum(v * mpmath.cos(k * t) for v, t in zip(vals, th)) / m)
        scale = max(abs(v) for v in vals)
        return float(abs(coef[0]) + abs(coef[1])), float(scale)


def choose_precision(f, a: float, b: float, L: int) -> int | None:
    """Working precision for :func:`remez_best_approx`; ``None`` means float64."""
    dps = 30
    while True:
        est, scale = _error_estimate(f, a, b, L, dps)
        if scale == 0:
            return None
        rel = est / scale
        if rel > 1e-5:
            return None
        if rel > 10.0 ** (-(dps - 12)) or dps > 400:
            break
        dps *= 2
    digits = -math.log10(rel) if rel > 0 else dps
    return int(math.ceil(digits)) + 25


def remez_best_approx(
    f: Callable,
    interval: tuple[float, float],
    L: int,
    *,
    tol: float = 1e-10,
    max_iter: int = MAX_EXCHANGES,
    precision: int | str | None = None,
) -> BestApproxResult:
    """Best uniform approximation of ``f`` on ``interval`` by polynomials of degree ``L``.

    Parameters
    ----------
    f : callable
        Continuous on the interval. Must accept mpmath numbers when extended
        precision is in use.
    interval : (a, b)
    L : int
        Polynomial degree, ``0 <= L <= 60``.
    tol : float
        Stop once the extremal residual magnitudes agree to this relative spread.
    max_iter : int
        Exchange limit; exceeding it raises :class:`ConvergenceError`.
    precision : {None, "double"} or int
        ``None`` picks float64 or a number of mpmath digits automatically.

    Returns
    -------
    BestApproxResult
    """
    a, b = float(interval[0]), float(interval[1])
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainError(f"interval must satisfy a < b, got {interval}")
    if int(L) != L or L < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {L}")
    if L > MAX_DEGREE:
        raise DomainError(f"degree {L} exceeds the conditioning guard {MAX_DEGREE}")
    L = int(L)
    if precision is None:
        dps = choose_precision(f, a, b, L)
    elif precision == "double":
        dps = None
    else:
        dps = int(precision)
    if dps is None:
        return _remez(f, a, b, L, tol, max_iter, _Arith(None))
    with mpmath.workdps(dps):
        return _remez(f, a, b, L, tol, max_iter, _Arith(dps))


def _remez(f, a, b, L, tol, max_iter, ar: _Arith) -> BestApproxResult:
    num = ar.num
    one = num(1)
    mid, half = (num(a) + num(b)) / 2, (num(b) - num(a)) / 2

    def fx(t):
        return f(mid + half * t)

    n_ref = L + 2
    ref = [-ar.cos(ar.pi * i / (L + 1)) for i in range(n_ref)]
    ref[0], ref[-1] = -one, one
    fscale = max(abs(fx(t)) for t in ref)
    spread = None
    for it in range(1, max_iter + 1):
        rows = [_cheb_row(t, L + 1, one) + [one if i % 2 == 0 else -one] for i, t in enumerate(ref)]
        sol = ar.solve(rows, [fx(t) for t in ref])
        c, h = sol[:-1], sol[-1]

        def r(t, c=c):
            return fx(t) - _clenshaw(c, t)

        vals = [r(t) for t in ref]
        if abs(h) <= 64 * ar.eps * fscale or any(u * v >= 0 for u, v in zip(vals, vals[1:])):
            probe = [-ar.cos(ar.pi * (j + one / 2) / (4 * n_ref)) for j in range(4 * n_ref)]
            if max(abs(r(t)) for t in probe + [-one, one]) <= 64 * ar.eps * (fscale or 1):
                return _result(c, ref, vals, 0 * h, a, b, L, it, ar)
            # a symmetric reference can level the error to zero; break the symmetry
            ref = _jitter(ref, num)
            continue

        # zeros of the residual between consecutive reference points
        zeros = []
        for i in range(L + 1):
            lo, hi = ref[i], ref[i + 1]
            zeros.append(_root(r, lo, hi, vals[i], vals[i + 1], (hi - lo) * 1e-6))
        edges = [-one] + zeros + [one]
        new_ref, new_vals = [], []
        for i in range(n_ref):
            s = 1 if vals[i] > 0 else -1
            lo, hi = edges[i], edges[i + 1]
            x_in, v_in = _maximise(lambda t, s=s: s * r(t), lo, hi, ar.sqrt_eps, num)
            best_x, best_v = x_in, v_in
            for end in ((lo,) if i == 0 else ()) + ((hi,) if i == n_ref - 1 else ()):
                ve = s * r(end)
                if ve > best_v:
                    best_x, best_v = end, ve
            if s * vals[i] > best_v:
                best_x, best_v = ref[i], s * vals[i]
            new_ref.append(best_x)
            new_vals.append(s * best_v)
        ref = new_ref
        mags = [abs(v) for v in new_vals]
        e_max, e_min = max(mags), min(mags)
        spread = (e_max - e_min) / e_max
        if spread <= tol:
            return _result(c, ref, new_vals, e_max, a, b, L, it, ar)
    raise ConvergenceError(
        f"Remez exchange did not converge in {max_iter} iterations (last spread {float(spread):.3e})"
    )


def _jitter(ref, num):
    out = list(ref)
    for i in range(1, len(ref) - 1):
        gap = min(ref[i] - ref[i - 1], ref[i + 1] - ref[i])
        out[i] = ref[i] + num(0.2) * gap * num((i * 0.6180339887498949) % 1.0 - 0.5)
    return out


def _result(c, ref, vals, err, a, b, L, it, ar) -> BestApproxResult:
    mid, half = (a + b) / 2.0, (b - a) / 2.0
    return BestApproxResult(
        error=float(err),
        coeffs=np.array([float(v) for v in c]),
        alternation_points=np.array([mid + half * float(t) for t in ref]),
        residuals=np.array([float(v) for v in vals]),
        interval=(a, b),
        degree=L,
        iterations=it,
        dps=ar.dps,
        error_mp=err if ar.dps is not None else None,
    )
