"""Path generators: Brownian, fractional Brownian, exponential and integral transforms."""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import rng
from .config import DEFAULT_TOLERANCES
from .errors import EmbeddingError
from .paths import Path, PartitionSequence


def brownian_path(seq: PartitionSequence, seed: int, scale: float = 1.0) -> Path:
    """Brownian motion on the finest grid of ``seq``, exact Gaussian increments."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    grid = seq.finest
    dt = np.diff(grid.times)
    dw = rng.normals(rng.stream(seed), dt.size) * (scale * np.sqrt(dt))
    values = np.concatenate(([0.0], np.cumsum(dw)))
    return Path(grid, values, f"brownian(seed={seed}, scale={scale:g})")


def fgn_autocovariance(hurst: float, n: int) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags 0..n."""
    k = np.arange(n + 1, dtype=np.float64)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


def circulant_eigenvalues(hurst: float, n: int) -> np.ndarray:
    gamma = fgn_autocovariance(hurst, n)
    row = np.concatenate((gamma, gamma[-2:0:-1]))
    return np.fft.fft(row).real


def fbm_covariance(times: np.ndarray, hurst: float) -> np.ndarray:
    s = np.asarray(times, dtype=np.float64)[:, None]
    t = np.asarray(times, dtype=np.float64)[None, :]
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)


def fbm_exact(times: np.ndarray, hurst: float, seed: int) -> np.ndarray:
    """fBm at ``times`` (first entry 0) by Cholesky factorisation of the covariance."""
    inner = np.asarray(times, dtype=np.float64)[1:]
    if inner.size > DEFAULT_TOLERANCES.fbm_exact_max_points:
        raise EmbeddingError(f"exact factorisation limited to {DEFAULT_TOLERANCES.fbm_exact_max_points} points")
    chol = np.linalg.cholesky(fbm_covariance(inner, hurst))
    z = rng.normals(rng.stream(seed), inner.size)
    return np.concatenate(([0.0], chol @ z))


def fbm_path(seq: PartitionSequence, hurst: float, seed: int) -> Path:
    """Fractional Brownian motion with Hurst index ``hurst`` on the finest grid.

    Uses the Davies-Harte circulant embedding of fractional Gaussian noise;
    if the embedding has materially negative eigenvalues, falls back to an
    exact Cholesky draw for small grids and raises otherwise.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    grid = seq.finest
    n = grid.n_intervals
    label = f"fbm(H={hurst:g}, seed={seed})"
    lam = circulant_eigenvalues(hurst, n)
    if lam.min() < -1e-10 * lam.max():
        if n <= DEFAULT_TOLERANCES.fbm_exact_max_points:
            return Path(grid, fbm_exact(grid.times, hurst, seed), label)
        raise EmbeddingError(f"circulant embedding not non-negative (min eigenvalue {lam.min():.3e})")
    lam = np.clip(lam, 0.0, None)
    m = lam.size
    z = rng.normals(rng.stream(seed), (2, m))
    noise = np.fft.fft(np.sqrt(lam / m) * (z[0] + 1j * z[1])).real[:n]
    dt = seq.horizon / n
    values = np.concatenate(([0.0], np.cumsum(noise))) * dt**hurst
    return Path(grid, values, label)


def exp_price_path(driver: Path, s0: float, sigma: float) -> Path:
    """``s0 * exp(sigma * driver)``; no drift correction, since the hedging results are pathwise."""
    if not s0 > 0:
        raise ValueError(f"s0 must be positive, got {s0}")
    return Path(driver.grid, s0 * np.exp(sigma * driver.values), f"exp[{driver.label}]")


def integral_path(path: Path) -> Path:
    """Running trapezoidal integral ``I_t = int_0^t X_u du`` on the same grid."""
    values = cumulative_trapezoid(path.values, path.times, initial=0.0)
    return Path(path.grid, values, f"integral[{path.label}]")
