"""Monte Carlo studies of the estimators on synthetic contingency tables.

Each iteration draws a population over ``C`` cells and a sample from it,
computes the true number of sample uniques that are also population
uniques, and runs the requested estimators on the sample profile.

Two sampling modes are supported. ``"fixed"`` draws a population of exactly
``n_bar`` records and a simple random sample of exactly ``n`` of them.
``"poisson"`` draws independent Poisson counts with means ``n p_j`` for the
sample and ``(n_bar - n) p_j`` for the unobserved records, which is the
model under which the series estimators are analysed.

Every iteration owns a random stream derived from ``(seed, iteration)``, so
results do not depend on how iterations are spread over worker processes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DiscriskError, DomainError
from .estimators import (
    applicable_estimators,
    default_smoothing,
    fit_poisson_gamma,
    estimate,
)
from .profile import CellCounts, PairedCounts, profile_from_frequencies

FAMILIES = ("zipf", "uniform", "dirichlet")
SAMPLING_MODES = ("fixed", "poisson")
TABLE_ROWS = ("true", "binomial2", "poisson", "naive", "dirichlet", "bethlehem", "skinner")
TABLE_CELLS = {1: 300_000, 2: 600_000, 3: 900_000}
TABLE_SAMPLE = 100_000
TABLE_UNOBSERVED = 1_000_000


@dataclass(frozen=True)
class Family:
    """Cell-probability law: ``zipf`` (exponent ``s``), ``uniform`` or ``dirichlet`` (``beta``)."""

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise DomainError(f"unknown family {self.kind!r}; expected one of {FAMILIES}")
        if self.kind == "uniform":
            object.__setattr__(self, "param", None)
        elif self.param is None or not self.param > 0 or not math.isfinite(self.param):
            raise DomainError(f"{self.kind} needs a positive parameter, got {self.param}")

    @classmethod
    def parse(cls, text: str) -> Family:
        """Parse ``"zipf:1"``, ``"uniform"`` or ``"dirichlet:0.5"``."""
        kind, _, param = text.strip().lower().partition(":")
        return cls(kind, float(param) if param else None)

    @property
    def label(self) -> str:
        if self.kind == "uniform":
            return "Uniform"
        return f"{self.kind.capitalize()} {self.param:g}"


@dataclass(frozen=True)
class Scenario:
    family: Family
    C: int
    n_bar: int
    n: int
    iterations: int = 100
    seed: int = 0
    sampling_mode: str = "fixed"

    def __post_init__(self):
        if self.C < 1:
            raise DomainError(f"need at least one cell, got C = {self.C}")
        if not 0 < self.n < self.n_bar:
            raise DomainError(f"need 0 < n < n_bar, got n = {self.n}, n_bar = {self.n_bar}")
        if self.iterations < 1:
            raise DomainError(f"iterations must be positive, got {self.iterations}")
        if self.sampling_mode not in SAMPLING_MODES:
            raise DomainError(f"sampling mode must be one of {SAMPLING_MODES}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def lam(self) -> float:
        return (self.n_bar - self.n) / self.n

    def to_json(self) -> dict:
        return {
            "family": self.family.kind,
            "family_param": self.family.param,
            "C": self.C,
            "n_bar": self.n_bar,
            "n": self.n,
            "lambda": self.lam,
            "iterations": self.iterations,
            "seed": self.seed,
            "sampling_mode": self.sampling_mode,
        }


@dataclass(frozen=True)
class EstimatorSummary:
    mean: float
    sd: float
    mse: float
    failures: int


@dataclass
class SimulationReport:
    """Aggregated results with the per-iteration values kept for further analysis."""

    scenario: Scenario
    true_tau1_mean: float
    true_tau1_sd: float
    estimators: dict[str, EstimatorSummary]
    truth: np.ndarray = field(repr=False)
    occupied: np.ndarray = field(repr=False)
    values: dict[str, np.ndarray] = field(repr=False)

    @property
    def iterations(self) -> int:
        return int(self.truth.size)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "iterations": self.iterations,
            "true_tau1_mean": self.true_tau1_mean,
            "true_tau1_sd": self.true_tau1_sd,
            "estimators": {
                k: {"mean": s.mean, "sd": s.sd, "mse": s.mse, "failures": s.failures}
                for k, s in self.estimators.items()
            },
        }


def generate_probabilities(family: Family, C: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Cell probabilities of length ``C``; only the Dirichlet family uses ``rng``."""
    if C < 1:
        raise DomainError(f"need at least one cell, got C = {C}")
    if family.kind == "uniform":
        return np.full(C, 1.0 / C)
    if family.kind == "zipf":
        w = np.arange(1, C + 1, dtype=float) ** -family.param
    else:
        if rng is None:
            raise DomainError("Dirichlet probabilities need a random generator")
        w = rng.dirichlet(np.full(C, family.param))
    return w / math.fsum(w.tolist())


def _draw_dense(p: np.ndarray, scenario: Scenario, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(sample, population)`` count vectors over all cells."""
    if scenario.sampling_mode == "poisson":
        sample = rng.poisson(scenario.n * p)
        unseen = rng.poisson((scenario.n_bar - scenario.n) * p)
        return sample, sample + unseen
    population = rng.multinomial(scenario.n_bar, p)
    records = np.repeat(np.arange(p.size), population)
    picked = rng.choice(scenario.n_bar, size=scenario.n, replace=False)
    sample = np.bincount(records[picked], minlength=p.size)
    return sample, population


def draw_population_and_sample(p, scenario: Scenario, rng: np.random.Generator) -> PairedCounts:
    """One population and sample; cells are the integer positions of ``p``."""
    sample, population = _draw_dense(np.asarray(p, dtype=float), scenario, rng)
    return PairedCounts(CellCounts.from_dense(sample), CellCounts.from_dense(population))


def _iteration_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, i)))


def _scenario_probabilities(scenario: Scenario) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(scenario.seed, spawn_key=(0,)))
    return generate_probabilities(scenario.family, scenario.C, rng)


def _run_iterations(scenario: Scenario, p: np.ndarray, names: tuple[str, ...], indices: range):
    m = len(indices)
    truth = np.empty(m)
    occupied = np.empty(m)
    out = {k: np.full(m, np.nan) for k in names}
    lam, n_nom = scenario.lam, scenario.n
    smoothing = {k: default_smoothing(k, lam, n_nom) for k in ("binomial2", "poisson") if k in names}
    for row, i in enumerate(indices):
        sample, population = _draw_dense(p, scenario, _iteration_rng(scenario.seed, i))
        truth[row] = np.count_nonzero((sample == 1) & (population == 1))
        occupied[row] = np.count_nonzero(sample)
        prof = profile_from_frequencies(sample)
        n_bar = n_nom * (1.0 + lam) if scenario.sampling_mode == "poisson" else scenario.n_bar
        pg_fit = None
        for name in names:
            try:
                if name in ("bethlehem", "skinner") and pg_fit is None:
                    pg_fit = fit_poisson_gamma(prof, n_bar)
                rep = estimate(name, prof, lam, n_bar, smoothing=smoothing.get(name),
                               n_nominal=n_nom, pg_fit=pg_fit)
                out[name][row] = rep.value
            except (DiscriskError, FloatingPointError, ZeroDivisionError):
                pass
    return truth, occupied, out


def run_scenario(
    scenario: Scenario,
    estimators: tuple[str, ...] | None = None,
    *,
    workers: int = 1,
    probabilities: np.ndarray | None = None,
) -> SimulationReport:
    """Run every iteration of ``scenario`` and aggregate.

    Parameters
    ----------
    estimators : tuple of str, optional
        Defaults to every estimator applicable at the scenario's ``lambda``.
    workers : int
        Number of processes; results are identical for any value.
    probabilities : ndarray, optional
        Overrides the probabilities generated from the scenario's family.
    """
    names = tuple(estimators) if estimators is not None else applicable_estimators(scenario.lam)
    p = probabilities if probabilities is not None else _scenario_probabilities(scenario)
    p = np.asarray(p, dtype=float)
    if p.size != scenario.C:
        raise DomainError(f"probability vector has {p.size} entries, scenario has C = {scenario.C}")
    total = scenario.iterations
    if workers <= 1 or total == 1:
        parts = [_run_iterations(scenario, p, names, range(total))]
    else:
        step = math.ceil(total / workers)
        chunks = [range(s, min(s + step, total)) for s in range(0, total, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_iterations, [scenario] * len(chunks), [p] * len(chunks),
                                  [names] * len(chunks), chunks))
    truth = np.concatenate([t for t, _, _ in parts])
    occupied = np.concatenate([o for _, o, _ in parts])
    values = {k: np.concatenate([v[k] for _, _, v in parts]) for k in names}
    return _summarise(scenario, truth, occupied, values)


def _sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def _summarise(scenario, truth, occupied, values) -> SimulationReport:
    summaries = {}
    for name, v in values.items():
        ok = np.isfinite(v)
        good = v[ok]
        summaries[name] = EstimatorSummary(
            mean=float(np.mean(good)) if good.size else math.nan,
            sd=_sd(good),
            mse=float(np.mean((good - truth[ok]) ** 2)) if good.size else math.nan,
            failures=int(np.count_nonzero(~ok)),
        )
    return SimulationReport(scenario, float(np.mean(truth)), _sd(truth), summaries,
                            truth, occupied, values)


def table_columns() -> list[Family]:
    """Column families in table order."""
    return [Family("zipf", s) for s in (0.2, 0.5, 0.8, 1.0)] + [
        Family("uniform"), Family("dirichlet", 0.5), Family("dirichlet", 1.0)]


def table_scenarios(which: int, seed: int, iterations: int = 100, scale: float = 1.0,
                    columns: list[Family] | None = None) -> list[Scenario]:
    """Scenarios of one results table.

    The sample has ``1e5 * scale`` records and the population adds
    ``1e6 * scale`` unobserved records to it, so ``lambda = 10``.
    """
    if which not in TABLE_CELLS:
        raise DomainError(f"table must be 1, 2 or 3, got {which}")
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    if iterations < 1:
        raise DomainError(f"iterations must be positive, got {iterations}")
    C = max(1, round(TABLE_CELLS[which] * scale))
    n = max(1, round(TABLE_SAMPLE * scale))
    n_bar = n + max(1, round(TABLE_UNOBSERVED * scale))
    cols = columns if columns is not None else table_columns()
    return [Scenario(f, C, n_bar, n, iterations, seed, "fixed") for f in cols]


def reproduce_tables(which: int, seed: int, iterations: int = 100, scale: float = 1.0, *,
                     workers: int = 1, columns: list[Family] | None = None) -> list[SimulationReport]:
    """Run every column of a results table."""
    scenarios = table_scenarios(which, seed, iterations, scale, columns)
    names = TABLE_ROWS[1:]
    return [run_scenario(s, names, workers=workers) for s in scenarios]


def table_rows(reports: list[SimulationReport]) -> tuple[list[str], list[list]]:
    """Header and rows (estimator, then mean and sd per column) of a results table."""
    header = ["estimator"]
    for r in reports:
        label = r.scenario.family.label
        header += [label, f"{label} sd"]
    rows = []
    for name in TABLE_ROWS:
        row: list = [name]
        for r in reports:
            if name == "true":
                row += [r.true_tau1_mean, r.true_tau1_sd]
            else:
                s = r.estimators[name]
                row += [s.mean, s.sd]
        rows.append(row)
    return header, rows


def format_number(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def table_csv(reports: list[SimulationReport]) -> str:
    header, rows = table_rows(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(v) for v in row])
    return buf.getvalue()
