"""Running-integral state ``(t, I, X)`` and exact solutions of the Asian pricing PDE

    F_t + X F_I + sigma**2 X**2 F_XX / 2 = 0,

used as test instruments for hedging along ``(t, I_t, X_t)``.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import QVMismatchWarning
from .generators import integral_path
from .hedging import PnLLedger, run_hedge
from .paths import Path, PartitionSequence
from .pricing import I_, S_, T_, Instrument, Jet, _as_state

ASIAN_NAMES = ("runningAverageForward", "squaredAverage")
ASIAN_RULES = ("deltaGamma", "deltaOnlyQVMatched")


def _expm_tail(x: np.ndarray) -> np.ndarray:
    """``(exp(x) - 1 - x - x**2/2) / x**2`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = np.abs(x) < 0.1
    xs = x[small]
    term = xs / 6.0
    acc = term.copy()
    for k in range(4, 16):
        term = term * xs / k
        acc += term
    out[small] = acc
    xl = x[~small]
    out[~small] = (np.expm1(xl) - xl - 0.5 * xl * xl) / (xl * xl)
    return out


def convexity_coefficient(sigma: float, tau) -> tuple[np.ndarray, ...]:
    """``b(tau)`` and its first three ``tau``-derivatives, where ``b`` solves
    ``b' = sigma**2 (b + tau**2)``, ``b(0) = 0``.

    Closed form ``b = 2 (e**x - 1 - x - x**2/2) / sigma**4`` with
    ``x = sigma**2 tau``.
    """
    tau = np.asarray(tau, dtype=np.float64)
    s2 = sigma * sigma
    b = 2.0 * tau * tau * _expm_tail(s2 * tau)
    b1 = s2 * (b + tau * tau)
    b2 = s2 * b1 + 2.0 * s2 * tau
    b3 = s2 * b2 + 2.0 * s2
    return b, b1, b2, b3


class AsianInstrument(Instrument):
    """Analytic solution ``F(t, I, X)`` of the Asian PDE with volatility ``sigma``.

    ``runningAverageForward``: ``F = I + X (T - t)``.
    ``squaredAverage``: ``F = (I + X (T - t))**2 + b(T - t) X**2``, see
    :func:`convexity_coefficient`.
    The state ``sigma`` coordinate is ignored (zero jet rows).
    """

    family = "asianAnalytic"

    def __init__(self, name: str, sigma: float, maturity: float):
        if name not in ASIAN_NAMES:
            raise ValueError(f"unknown Asian instrument {name!r}; expected one of {ASIAN_NAMES}")
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if not maturity > 0:
            raise ValueError("maturity must be positive")
        self.name = name
        self.sigma = float(sigma)
        self.maturity = float(maturity)

    def __repr__(self):
        return f"AsianInstrument({self.name}, sigma={self.sigma:g}, T={self.maturity:g})"

    def terminal(self, s, I=None):
        if I is None:
            raise ValueError("Asian instruments need the running integral I")
        I = np.asarray(I, dtype=np.float64)
        return I if self.name == "runningAverageForward" else I * I

    def _jet(self, t, s, sigma, I) -> Jet:
        if I is None:
            raise ValueError("Asian instruments need the running integral I")
        I = np.broadcast_to(np.asarray(I, dtype=np.float64), s.shape)
        tau = self.maturity - t
        g = I + s * tau
        jet = Jet.zeros(s.shape)
        grad, hess = jet.grad, jet.hess
        if self.name == "runningAverageForward":
            jet.value[...] = g
            grad[T_], grad[I_], grad[S_] = -s, 1.0, tau
            hess[T_, S_] = hess[S_, T_] = -1.0
            return jet
        b, b1, b2, _ = convexity_coefficient(self.sigma, tau)
        jet.value[...] = g * g + b * s * s
        grad[T_] = -2.0 * g * s - b1 * s * s
        grad[I_] = 2.0 * g
        grad[S_] = 2.0 * g * tau + 2.0 * b * s
        hess[T_, T_] = 2.0 * s * s + b2 * s * s
        hess[I_, I_] = 2.0
        hess[S_, S_] = 2.0 * tau * tau + 2.0 * b
        hess[T_, I_] = hess[I_, T_] = -2.0 * s
        hess[I_, S_] = hess[S_, I_] = 2.0 * tau
        hess[T_, S_] = hess[S_, T_] = -2.0 * tau * s - 2.0 * g - 2.0 * b1 * s
        return jet

    def increments(self, t, s, sigma, I, prices) -> np.ndarray:
        I = np.asarray(I, dtype=np.float64)
        tau = self.maturity - t
        dx, dt = np.diff(s), np.diff(t)
        # G_v - G_u = dI + tau_v dX - X_u dt, free of cancellation
        dg = np.diff(I) + tau[1:] * dx - s[:-1] * dt
        if self.name == "runningAverageForward":
            return dg
        g = I + s * tau
        b = convexity_coefficient(self.sigma, tau)[0]
        return dg * (g[:-1] + g[1:]) + np.diff(b) * s[1:] ** 2 + b[:-1] * dx * (s[:-1] + s[1:])

    def third_directional(self, t, s, sigma, I, h, active, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
        t, s = _as_state(t, s)
        out = np.zeros((4,) + s.shape)
        if self.name == "runningAverageForward":
            return out
        tau = self.maturity - t
        _, b1, b2, b3 = convexity_coefficient(self.sigma, tau)
        ht, hi, hs = h[T_], h[I_], h[S_]
        # nonzero third partials: ttt, ttX, tXX, tIX
        f_ttt = -b3 * s * s
        f_ttx = 4.0 * s + 2.0 * b2 * s
        f_txx = -4.0 * tau - 2.0 * b1
        out[0] = f_ttt * ht**3 / 6.0
        out[1] = (f_ttx * ht * ht - 4.0 * ht * hi) * hs / 2.0
        out[2] = f_txx * ht * hs * hs / 2.0
        return out


def asian_analytic(name: str, sigma: float, maturity: float = 1.0) -> AsianInstrument:
    return AsianInstrument(name, sigma, maturity)


def asian_pde_residual(instr: AsianInstrument, t, I, X, relative: bool = False):
    """``F_t + X F_I + sigma**2 X**2 F_XX / 2`` from the exact jet; with
    ``relative`` divided by the sum of the magnitudes of the three terms."""
    t, X = _as_state(t, X)
    j = instr.jet(t, X, None, I)
    a = j.grad[T_]
    b = X * j.grad[I_]
    c = 0.5 * instr.sigma**2 * X * X * j.hess[S_, S_]
    r = a + b + c
    if not relative:
        return r
    scale = np.abs(a) + np.abs(b) + np.abs(c)
    return np.where(scale > 0, np.abs(r) / np.where(scale > 0, scale, 1.0), 0.0)


def realized_log_variance(x: Path) -> float:
    """Sum of squared log-increments on the sampling grid."""
    return math.fsum(np.diff(np.log(x.values)) ** 2)


def run_asian_hedge(x: Path, seq: PartitionSequence, level: int, target: AsianInstrument,
                    hedges: list[Instrument], rule: str = "deltaGamma", *, integral: Path | None = None,
                    t_cut: float | None = None, on_degenerate: str = "raise",
                    tol: Tolerances = DEFAULT_TOLERANCES) -> PnLLedger:
    """Hedge ``target`` along ``(t, I_t, X_t)`` at level ``level``.

    ``deltaGamma`` takes ``[underlying, convex option]`` and zeroes portfolio
    delta and gamma in ``X``. ``deltaOnlyQVMatched`` takes ``[underlying]``
    and relies on the realized quadratic variation of ``log X`` matching
    ``sigma**2 T``; a :class:`QVMismatchWarning` is issued when it does not
    (the run still proceeds).
    """
    if rule not in ASIAN_RULES:
        raise ValueError(f"rule must be one of {ASIAN_RULES}, got {rule!r}")
    if integral is None:
        integral = integral_path(x)
    if rule == "deltaOnlyQVMatched":
        if np.any(x.values <= 0):
            raise ValueError("QV-matched delta hedging needs a positive price path")
        qv = realized_log_variance(x)
        want = target.sigma**2 * x.horizon
        if abs(qv - want) > tol.qv_mismatch_rtol * want:
            warnings.warn(f"realized log-QV {qv:.4g} differs from sigma^2 T = {want:.4g}; "
                          "delta-only replication is not expected to converge", QVMismatchWarning,
                          stacklevel=2)
        inner = "delta"
    else:
        inner = "deltaGamma"
    return run_hedge(x, seq, level, [target, *hedges], inner, integral=integral, t_cut=t_cut,
                     on_degenerate=on_degenerate, tol=tol)
