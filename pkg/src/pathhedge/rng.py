"""Seeded random streams.

Every stream is a Philox counter-based generator keyed by the integer seed,
so a given seed yields the same numbers on every platform and numpy build.
Gaussians come from the inverse normal CDF applied to 53-bit uniforms that
are centred in their bins (never exactly 0 or 1), not from numpy's ziggurat.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_TWO53 = float(2**53)


def stream(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(key=int(seed)))


def uniforms(gen: np.random.Generator, size) -> np.ndarray:
    k = gen.integers(0, 2**53, size=size, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) / _TWO53


def normals(gen: np.random.Generator, size) -> np.ndarray:
    return ndtri(uniforms(gen, size))
