"""Cell counts and frequency-of-frequencies profiles.

Every estimator in the package consumes a :class:`FrequencyProfile`: the
number ``Z_i`` of cells observed exactly ``i`` times, together with the
sample size ``n`` and the number of occupied cells ``k``.
"""

from __future__ import annotations

import csv
from collections import Counter
from collections.abc import Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .errors import DomainError

#: Joins quasi-identifier columns into one cell key (ASCII unit separator).
KEY_SEPARATOR = "\x1f"


@dataclass(frozen=True)
class FrequencyProfile:
    """Frequency-of-frequencies summary of a cross-classified sample.

    Parameters
    ----------
    n : int
        Number of records.
    z : Mapping[int, int]
        ``z[i]`` is the number of cells with frequency ``i``. Absent keys
        mean zero; stored values are all positive.
    k : int, optional
        Number of occupied cells. Computed from ``z`` when omitted and
        checked against it otherwise.
    """

    n: int
    z: Mapping[int, int]
    k: int = -1

    def __post_init__(self):
        z = {int(i): int(c) for i, c in self.z.items() if c != 0}
        if any(i < 1 for i in z):
            raise DomainError("frequencies must be >= 1")
        if any(c < 0 for c in z.values()):
            raise DomainError("frequency-of-frequency counts must be >= 0")
        k = sum(z.values())
        if self.k not in (-1, k):
            raise DomainError(f"k={self.k} disagrees with sum of Z_i = {k}")
        total = sum(i * c for i, c in z.items())
        if total != self.n:
            raise DomainError(f"sum of i*Z_i = {total} but n = {self.n}")
        object.__setattr__(self, "z", dict(sorted(z.items())))
        object.__setattr__(self, "k", k)

    @property
    def max_frequency(self) -> int:
        return max(self.z, default=0)

    def __getitem__(self, i: int) -> int:
        return self.z.get(i, 0)

    def z_bar(self, i: int) -> int:
        return z_bar(self, i)

    def as_array(self) -> np.ndarray:
        """Dense vector ``a`` with ``a[i-1] = Z_i`` for ``i = 1..max_frequency``."""
        out = np.zeros(self.max_frequency, dtype=np.int64)
        for i, c in self.z.items():
            out[i - 1] = c
        return out

    def __add__(self, other: FrequencyProfile) -> FrequencyProfile:
        merged = Counter(self.z)
        merged.update(other.z)
        return FrequencyProfile(self.n + other.n, merged)

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "z": {str(i): c for i, c in self.z.items()}}

    @classmethod
    def from_json(cls, obj: Mapping) -> FrequencyProfile:
        z = {int(i): int(c) for i, c in obj["z"].items()}
        k = int(obj["k"]) if "k" in obj else -1
        return cls(int(obj["n"]), z, k)


@dataclass(frozen=True)
class CellCounts:
    """Sparse map from cell identifier to a positive frequency.

    Stored as two parallel arrays so that tables with hundreds of thousands
    of cells stay cheap to build; zero-frequency cells are dropped on
    construction.
    """

    cells: np.ndarray
    freqs: np.ndarray
    _index: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        cells = np.asarray(self.cells)
        freqs = np.asarray(self.freqs, dtype=np.int64)
        if cells.shape != freqs.shape or cells.ndim != 1:
            raise DomainError("cells and freqs must be 1-d arrays of equal length")
        if np.any(freqs < 0):
            raise DomainError("frequencies must be nonnegative")
        keep = freqs > 0
        object.__setattr__(self, "cells", cells[keep])
        object.__setattr__(self, "freqs", freqs[keep])

    @classmethod
    def from_mapping(cls, counts: Mapping[Hashable, int]) -> CellCounts:
        cells = np.empty(len(counts), dtype=object)
        cells[:] = list(counts.keys())
        return cls(cells, np.fromiter(counts.values(), dtype=np.int64, count=len(counts)))

    @classmethod
    def from_dense(cls, counts: np.ndarray) -> CellCounts:
        """Cells are the integer positions ``0..len(counts)-1``."""
        counts = np.asarray(counts)
        cells = np.flatnonzero(counts)
        return cls(cells, counts[cells])

    @property
    def total(self) -> int:
        return int(self.freqs.sum())

    def __len__(self):
        return self.cells.size

    def as_dict(self) -> dict:
        return dict(zip(self.cells.tolist(), self.freqs.tolist()))

    def lookup(self, cells: np.ndarray) -> np.ndarray:
        """Frequencies of ``cells``; zero for cells that are not stored."""
        cells = np.asarray(cells)
        if self.cells.dtype.kind in "iu" and cells.dtype.kind in "iu":
            order = np.argsort(self.cells, kind="stable")
            sorted_cells = self.cells[order]
            pos = np.searchsorted(sorted_cells, cells)
            pos_c = np.minimum(pos, max(sorted_cells.size - 1, 0))
            hit = (pos < sorted_cells.size) & (sorted_cells[pos_c] == cells)
            out = np.zeros(cells.size, dtype=np.int64)
            out[hit] = self.freqs[order][pos_c[hit]]
            return out
        if self._index is None:
            object.__setattr__(self, "_index", self.as_dict())
        get = self._index.get
        return np.fromiter((get(c, 0) for c in cells.tolist()), dtype=np.int64, count=cells.size)


@dataclass(frozen=True)
class PairedCounts:
    """Sample counts together with the population counts of the same cells."""

    sample: CellCounts
    population: CellCounts

    def validate(self) -> np.ndarray:
        """Return the population frequency of every sample cell.

        Raises
        ------
        DomainError
            If a sample cell is missing from the population or is more
            frequent in the sample than in the population.
        """
        pop = self.population.lookup(self.sample.cells)
        bad = np.flatnonzero(pop < self.sample.freqs)
        if bad.size:
            j = bad[0]
            raise DomainError(
                f"cell {self.sample.cells[j]!r}: sample frequency "
                f"{self.sample.freqs[j]} exceeds population frequency {pop[j]}"
            )
        return pop


def profile_from_frequencies(freqs: Iterable[int] | np.ndarray) -> FrequencyProfile:
    """Profile of a vector of per-cell frequencies (zeros are ignored)."""
    freqs = np.asarray(freqs, dtype=np.int64).ravel()
    freqs = freqs[freqs > 0]
    if freqs.size == 0:
        return FrequencyProfile(0, {})
    zi = np.bincount(freqs)
    nz = np.flatnonzero(zi)
    return FrequencyProfile(int(freqs.sum()), dict(zip(nz.tolist(), zi[nz].tolist())))


def profile_from_counts(counts: CellCounts | Mapping[Hashable, int]) -> FrequencyProfile:
    if not isinstance(counts, CellCounts):
        counts = CellCounts.from_mapping(counts)
    return profile_from_frequencies(counts.freqs)


def profile_from_records(records: Iterable[Hashable]) -> FrequencyProfile:
    """Cross-classify records, one cell identifier per record."""
    return profile_from_frequencies(list(Counter(records).values()))


def z_bar(profile: FrequencyProfile, i: int) -> int:
    """Number of cells with frequency at least ``i``."""
    if i < 1:
        raise DomainError(f"z_bar needs i >= 1, got {i}")
    return sum(c for j, c in profile.z.items() if j >= i)


def true_tau1(paired: PairedCounts) -> int:
    """Number of cells that are unique in the sample and in the population."""
    pop = paired.validate()
    return int(np.count_nonzero((paired.sample.freqs == 1) & (pop == 1)))


def read_records(stream: IO[str], key_cols: list[str] | None = None) -> list[str]:
    """Read cell identifiers from text (one per line) or from CSV columns.

    With ``key_cols`` the stream is parsed as CSV with a header and the
    selected columns are joined with :data:`KEY_SEPARATOR`.
    """
    if not key_cols:
        return [line.rstrip("\r\n") for line in stream if line.strip()]
    reader = csv.DictReader(stream)
    missing = [c for c in key_cols if c not in (reader.fieldnames or [])]
    if missing:
        raise DomainError(f"key columns not found in header: {missing}")
    keys = []
    for row in reader:
        parts = [row[c] for c in key_cols]
        if any(KEY_SEPARATOR in p for p in parts):
            raise DomainError("key value contains the reserved separator \\x1f")
        keys.append(KEY_SEPARATOR.join(parts))
    return keys


def read_cell_counts(stream: IO[str]) -> CellCounts:
    """Read a ``cell,count`` CSV."""
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["cell", "count"]:
        raise DomainError("counts file must have header 'cell,count'")
    counts: dict[str, int] = {}
    for row in reader:
        c = int(row["count"])
        if c < 0:
            raise DomainError(f"negative count for cell {row['cell']!r}")
        counts[row["cell"]] = counts.get(row["cell"], 0) + c
    return CellCounts.from_mapping(counts)
