"""Variation analytics: p-th variation along a partition, p-variation, oscillation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import LengthGuardError
from .paths import Partition, Path


@dataclass(frozen=True)
class VariationReport:
    p: float
    level: int | None
    sum: float
    running: Path | None = None


def pth_variation(path: Path, partition: Partition, p: float, level: int | None = None,
                  running: bool = True) -> VariationReport:
    """``sum |X_v - X_u|**p`` over consecutive times of ``partition``.

    ``running`` attaches the partial sums ``t -> sum_{u < t}`` as a path on the
    partition; its last entry is the total.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    x = path.at(partition)
    terms = np.abs(np.diff(x)) ** p
    partial = np.concatenate(([0.0], np.cumsum(terms)))
    total = math.fsum(terms)
    partial[-1] = total
    proc = Path(partition, partial, f"{p:g}-variation[{path.label}]") if running else None
    return VariationReport(float(p), level, total, proc)


def total_variation(path: Path) -> float:
    """1-variation of the sampled sequence (exact for piecewise-monotone samples)."""
    return math.fsum(np.abs(np.diff(path.values)))


def sup_p_variation(path: Path, p: float) -> float:
    """p-variation norm: supremum of the p-th variation sum over all sub-partitions
    of the sampling grid, raised to ``1/p``.

    O(n^2) dynamic programme; grids above 2**12 intervals are refused.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    x = path.values
    n = x.size
    cap = DEFAULT_TOLERANCES.sup_pvar_max_intervals
    if n - 1 > cap:
        raise LengthGuardError(f"sup_p_variation is limited to {cap} intervals, got {n - 1}")
    if p == 1:
        return total_variation(path)
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + np.abs(x[j] - x[:j]) ** p)
    return float(best[-1] ** (1.0 / p))


def _sparse_table(x: np.ndarray, op) -> list[np.ndarray]:
    table = [x]
    span = 1
    while 2 * span <= x.size:
        prev = table[-1]
        table.append(op(prev[:-span], prev[span:]))
        span *= 2
    return table


def _range_query(table, lo: np.ndarray, hi: np.ndarray, op) -> np.ndarray:
    length = hi - lo + 1
    k = np.floor(np.log2(length)).astype(np.int64)
    out = np.empty(lo.size)
    for j in np.unique(k):
        m = k == j
        row = table[j]
        out[m] = op(row[lo[m]], row[hi[m] - (1 << j) + 1])
    return out


def oscillation(path: Path, delta: float, closed: bool = False) -> float:
    """Modulus of continuity ``sup |X_s - X_t|`` over sampled pairs with ``|s - t| < delta``.

    ``closed=True`` admits ``|s - t| <= delta``, the right reading on a grid
    when ``delta`` is itself a grid spacing.
    """
    T = path.horizon
    if not 0 < delta <= T:
        raise ValueError(f"delta must lie in (0, {T}], got {delta}")
    t, x = path.times, path.values
    # nudge far below any grid spacing, far above rounding in t + delta
    nudge = 64 * np.finfo(float).eps * T
    if closed:
        hi = np.searchsorted(t, t + delta + nudge, side="right") - 1
    else:
        hi = np.searchsorted(t, t + delta - nudge, side="left") - 1
    lo = np.arange(t.size)
    hi = np.maximum(hi, lo)
    mx = _range_query(_sparse_table(x, np.maximum), lo, hi, np.maximum)
    mn = _range_query(_sparse_table(x, np.minimum), lo, hi, np.minimum)
    return float(np.max(mx - mn))
