"""Partitions, nested partition sequences and sampled paths.

Paths live only on the finest grid of a :class:`PartitionSequence`; coarser
levels are exact sub-arrays of that grid, so a single simulated path serves
every level and nothing is ever interpolated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import LengthGuardError, PartitionMismatch


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Partition:
    times: np.ndarray

    def __post_init__(self):
        t = _frozen(self.times)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a partition needs at least two times")
        if t[0] != 0.0:
            raise ValueError(f"partition must start at 0, got {t[0]}")
        if not np.all(np.diff(t) > 0):
            raise ValueError("partition times must be strictly increasing")
        object.__setattr__(self, "times", t)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.times)))

    @property
    def n_intervals(self) -> int:
        return self.times.size - 1

    def __len__(self) -> int:
        return self.times.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and np.array_equal(self.times, other.times)

    __hash__ = None


@dataclass(frozen=True)
class PartitionSequence:
    """Nested partitions ``level -> Partition`` of ``[0, horizon]``.

    Level ``N`` has ``base * ratio**N`` equal intervals. Dyadic sequences are
    ``base=1, ratio=2``.
    """

    horizon: float
    max_level: int
    kind: str = "dyadic"
    base: int = 1
    ratio: int = 2
    finest: Partition = field(init=False, repr=False)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.ratio < 2 or self.base < 1:
            raise ValueError("need base >= 1 and integer ratio >= 2 for nesting")
        n = self.base * self.ratio**self.max_level
        finest = Partition(np.arange(n + 1, dtype=np.float64) * (self.horizon / n))
        object.__setattr__(self, "finest", finest)

    def n_intervals(self, level: int) -> int:
        self._check_level(level)
        return self.base * self.ratio**level

    def stride(self, level: int) -> int:
        """Index step of ``level`` inside the finest grid."""
        return self.ratio ** (self.max_level - self._check_level(level))

    def level(self, level: int) -> Partition:
        return Partition(self.finest.times[:: self.stride(level)])

    def levels(self):
        return range(0 if self.base > 1 else 1, self.max_level + 1)

    def _check_level(self, level: int) -> int:
        lo = 0 if self.base > 1 else 1
        if not lo <= level <= self.max_level:
            raise ValueError(f"level {level} outside [{lo}, {self.max_level}]")
        return level


def make_dyadic_sequence(T: float, max_level: int) -> PartitionSequence:
    cap = DEFAULT_TOLERANCES.max_dyadic_level
    if not 1 <= max_level <= cap:
        raise LengthGuardError(f"max_level must lie in [1, {cap}], got {max_level}")
    return PartitionSequence(float(T), int(max_level), "dyadic", 1, 2)


def make_uniform_sequence(T: float, base: int, ratio: int, max_level: int) -> PartitionSequence:
    """Nested uniform sequence with ``base * ratio**N`` steps at level ``N``."""
    n = base * ratio**max_level
    if n > 2**DEFAULT_TOLERANCES.max_dyadic_level:
        raise LengthGuardError(f"finest level would have {n} intervals")
    return PartitionSequence(float(T), int(max_level), "uniform", int(base), int(ratio))


@dataclass(frozen=True, eq=False)
class Path:
    grid: Partition
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.times.shape:
            raise ValueError(f"{v.size} values for {self.grid.times.size} grid times")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def horizon(self) -> float:
        return self.grid.horizon

    def indices_of(self, partition: Partition) -> np.ndarray:
        """Grid indices of ``partition`` times; refuses times that are not grid times."""
        t = self.grid.times
        idx = np.searchsorted(t, partition.times)
        idx = np.clip(idx, 0, t.size - 1)
        lower = np.clip(idx - 1, 0, t.size - 1)
        # pick the nearer neighbour, then insist it is (numerically) equal
        pick = np.where(np.abs(t[lower] - partition.times) < np.abs(t[idx] - partition.times), lower, idx)
        atol = DEFAULT_TOLERANCES.partition_match_atol * self.horizon
        if not np.all(np.abs(t[pick] - partition.times) <= atol):
            raise PartitionMismatch("partition times are not a subset of the path's sampling grid")
        return pick

    def at(self, partition: Partition) -> np.ndarray:
        return self.values[self.indices_of(partition)]

    def restrict(self, partition: Partition) -> "Path":
        return Path(partition, self.at(partition), self.label)

    def map(self, fn, label: str | None = None) -> "Path":
        return Path(self.grid, fn(self.values), self.label if label is None else label)


def constant_path(grid: Partition, value: float, label: str = "constant") -> Path:
    return Path(grid, np.full(grid.times.size, float(value)), label)


def function_path(grid: Partition, fn, label: str = "") -> Path:
    """Sample a deterministic function of time on ``grid``."""
    return Path(grid, np.asarray(fn(grid.times), dtype=np.float64), label)


def write_path_csv(path: Path, file) -> None:
    with open(file, "w", newline="") as fh:
        fh.write("time,value\n")
        for t, v in zip(path.times, path.values):
            fh.write(f"{t:.17g},{v:.17g}\n")


def read_path_csv(file, label: str | None = None) -> Path:
    with open(file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip().lower() for h in header] != ["time", "value"]:
            raise ValueError(f"expected header 'time,value', got {header!r}")
        rows = [(float(a), float(b)) for a, b in reader]
    arr = np.array(rows, dtype=np.float64)
    return Path(Partition(arr[:, 0]), arr[:, 1], FsPath(file).stem if label is None else label)
