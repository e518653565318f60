"""Acceptance checks; each test prints one PASS/FAIL line with the measured values."""

import math
import os
import time

import mpmath
import numpy as np
import pytest

from discrisk import bounds
from discrisk.cli import main
from discrisk.polyapprox import ExpDecay, bessel_i, bessel_i_scaled, bessel_lower_bound, remez_best_approx
from discrisk.polyapprox.lab import eq19_terms
from discrisk.simulation import Family, Scenario, generate_probabilities, reproduce_tables, run_scenario
from discrisk.smoothing import optimal_binomial_x0, optimal_poisson_beta

WORKERS = max(1, min(8, os.cpu_count() or 1))


@pytest.fixture(scope="module")
def below_one_run():
    sc = Scenario(Family("uniform"), 100, 1500, 1000, iterations=20_000, seed=2024, sampling_mode="poisson")
    t0 = time.perf_counter()
    rep = run_scenario(sc, ("unbiased",))
    return rep, time.perf_counter() - t0


def test_unbiasedness(below_one_run, report):
    rep, secs = below_one_run
    v = rep.values["unbiased"]
    p = np.full(100, 0.01)
    target = float(np.sum(1000 * p * np.exp(-1.5 * 1000 * p)))
    se = np.std(v, ddof=1) / math.sqrt(v.size)
    ok = abs(v.mean() - target) <= 3 * se and secs <= 30
    report(1, ok, f"mean={v.mean():.6g} target={target:.6g} 3SE={3 * se:.3g} runtime={secs:.1f}s")
    assert ok


def test_variance_bound(below_one_run, report):
    rep, _ = below_one_run
    diff = rep.truth - rep.values["unbiased"]
    var = float(np.var(diff, ddof=1))
    bound = bounds.psi(0.5) ** 2 * float(np.mean(rep.occupied))
    ok = var <= 1.1 * bound
    report(2, ok, f"Var(tau1 - est)={var:.4g} bound={bound:.4g} (10% slack)")
    assert ok


PAPER_TABLE1 = {
    "Zipf 0.2": {"true": 2868, "naive": 6413, "dirichlet": 18461},
    "Zipf 1": {"true": 7313, "naive": 2157, "dirichlet": 2459},
    "Uniform": {"true": 2579, "naive": 6511, "dirichlet": 19303},
}


def test_table1_full_scale(report):
    t0 = time.perf_counter()
    reps = reproduce_tables(1, seed=42, iterations=100, workers=WORKERS,
                            columns=[Family("zipf", 0.2), Family("zipf", 1.0), Family("uniform")])
    secs = time.perf_counter() - t0
    ok = secs <= 600
    parts = []
    for r in reps:
        label = r.scenario.family.label
        ref = PAPER_TABLE1[label]
        true_ok = abs(r.true_tau1_mean / ref["true"] - 1) <= 0.10
        naive_ok = abs(r.estimators["naive"].mean / ref["naive"] - 1) <= 0.20
        dir_ok = abs(r.estimators["dirichlet"].mean / ref["dirichlet"] - 1) <= 0.20
        order_ok = True
        if r.scenario.family.kind == "zipf":
            order_ok = r.estimators["bethlehem"].mean >= r.estimators["skinner"].mean
        ok = ok and true_ok and naive_ok and dir_ok and order_ok
        parts.append(f"{label}: true={r.true_tau1_mean:.0f} naive={r.estimators['naive'].mean:.0f} "
                     f"dirichlet={r.estimators['dirichlet'].mean:.0f} "
                     f"B={r.estimators['bethlehem'].mean:.0f} S={r.estimators['skinner'].mean:.0f}")
    report(3, ok, "; ".join(parts) + f"; runtime={secs:.0f}s on {WORKERS} workers")
    assert ok


def test_poisson_mse_bound(report):
    p = generate_probabilities(Family("zipf", 1.0), 1000)
    ok, parts = True, []
    for lam in (2, 5, 9):
        for n in (1000, 10_000):
            sc = Scenario(Family("zipf", 1.0), 1000, n * (1 + lam), n, iterations=5000, seed=77,
                          sampling_mode="poisson")
            rep = run_scenario(sc, ("poisson",), workers=WORKERS, probabilities=p)
            mse = rep.estimators["poisson"].mse
            bound = bounds.mse_bound_poisson(lam, n, optimal_poisson_beta(lam, n))
            ok = ok and mse <= bound and rep.estimators["poisson"].failures == 0
            parts.append(f"lam={lam} n={n}: {mse:.4g}<={bound:.4g}")
    report(4, ok, "; ".join(parts))
    assert ok


def test_bound_algebra(report):
    a1 = bounds.poisson_constant(1.0)
    grid = np.exp(np.linspace(0, math.log(1e4), 400))
    a_ok = all(bounds.poisson_constant(x) <= a1 for x in grid)
    beta = optimal_poisson_beta(1, math.exp(4))
    with mpmath.workdps(60):
        lam, n = mpmath.mpf(9), mpmath.mpf(10) ** 5
        arg = n * lam**2 / ((lam + 1) * (lam**2 * (mpmath.mpf(3) ** (mpmath.mpf(10) / 3) - 1) - 4 * lam - 4))
        x0_hp = int(mpmath.floor(mpmath.mpf(3) / 10 * mpmath.log(arg, 3)))
    x0 = optimal_binomial_x0(9, 100_000)
    ok = a1 == 2.0 and a_ok and beta == 1.0 and x0 == 1 == x0_hp
    report(5, ok, f"A(1)={a1!r} A<=A(1) on grid={a_ok} beta(1,e^4)={beta!r} x0(9,1e5)={x0} (60-digit: {x0_hp})")
    assert ok


def test_polyapprox(report):
    t0 = time.perf_counter()
    e0 = remez_best_approx(ExpDecay(1.0, 1.0), (-1.0, 1.0), 0).error
    e0_ok = abs(e0 - (1 - math.exp(-2)) / 2) <= 1e-8
    alt_ok = eq19_ok = True
    worst = 0.0
    for C in (1.0, 5.0, 20.0):
        for L in range(1, 21):
            res = remez_best_approx(ExpDecay(C, 1.0), (-1.0, 1.0), L)
            dev = float(np.max(np.abs(np.abs(res.residuals) - res.error)) / res.error)
            worst = max(worst, dev)
            alt_ok &= res.sign_changes() == L + 1 and res.alternation_points.size == L + 2 and dev <= 1e-8
            log_e = float(mpmath.log(res.error_mp)) if res.error_mp is not None else math.log(res.error)
            eq19_ok &= all(log_e >= lv for _, lv in eq19_terms(L, C))
    resc = 0.0
    xi = 10.0
    for C in (1.0, 5.0, 20.0):
        B = C / (1 - 1 / xi)
        for L in (1, 5, 10, 20):
            eg = remez_best_approx(ExpDecay(C, 1.0), (-1.0, 1.0), L).error
            ed = remez_best_approx(ExpDecay(2 * B), (1 / xi, 1.0), L).error
            resc = max(resc, abs(ed - math.exp(-2 * B / xi) * eg) / ed)
    secs = time.perf_counter() - t0
    ok = e0_ok and alt_ok and eq19_ok and resc <= 1e-8 and secs <= 60
    report(6, ok, f"E0={e0:.10f} alternation={alt_ok} (max rel dev {worst:.1e}) eq19={eq19_ok} "
                  f"rescaling max rel diff={resc:.1e} runtime={secs:.1f}s")
    assert ok


def test_bessel(report):
    checked, lemma_ok = 0, True
    for k in range(21):
        for z in (9.0, 20.0, 50.0, 200.0):
            if z > 8 * math.sqrt(1 + (k / z) ** 2):
                checked += 1
                lemma_ok &= bessel_i_scaled(k, z) > bessel_lower_bound(k, z)
    worst = 0.0
    for z in (9.0, 20.0, 50.0, 200.0):
        for k in range(1, 21):
            lhs = bessel_i(k - 1, z) - bessel_i(k + 1, z)
            rhs = 2 * k / z * bessel_i(k, z)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    ok = lemma_ok and worst <= 1e-8
    report(7, ok, f"lemma holds on {checked} admissible points={lemma_ok}; recurrence max rel err={worst:.1e}")
    assert ok


def test_minimax_curve(report):
    ordered, implied = True, []
    for n in (1e4, 1e6):
        for lam in np.linspace(math.e**2, 20.0, 60):
            lower = bounds.minimax_lower_bound(lam, n, 1.0)
            upper = bounds.nmse_bound_poisson(lam, n)
            if lam + 1 > math.log(n):
                implied.append((n, lam, upper / lower))
            else:
                ordered &= lower <= upper
    kmin = min(k for _, _, k in implied)
    ok = ordered
    report(8, ok, f"ordering holds where 1+lam <= log n: {ordered}; on {len(implied)} points with "
                  f"1+lam > log n the lower bound equals K, so ordering needs K <= nmse: implied K in "
                  f"[{kmin:.3f}, {max(k for _, _, k in implied):.3f}]")
    assert ok


def test_determinism(tmp_path, report):
    outs = []
    for i, threads in enumerate((1, 1, 2, 4)):
        f = tmp_path / f"t{i}.csv"
        assert main(["simulate", "--table", "1", "--seed", "42", "--scale", "0.01",
                     "--threads", str(threads), "--out", str(f)]) == 0
        outs.append(f.read_bytes())
    ok = all(o == outs[0] for o in outs)
    report(9, ok, f"{len(outs)} runs (threads 1,1,2,4) byte-identical={ok}, {len(outs[0])} bytes")
    assert ok
