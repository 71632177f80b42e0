"""Zero-rate Black-Scholes pricing, greeks and exact PDE-solution instruments.

Every European price here is a function ``G(s, w)`` of spot and total
variance ``w = sigma**2 * (T - t)``; such a function solves the zero-rate
Black-Scholes PDE iff ``G_w = s**2 G_ss / 2``. Derivatives in ``t`` and
``sigma`` follow from the chain rule through ``w``, which is how the vega-gamma
relation ``vega = sigma (T - t) s**2 gamma`` arises.

Instruments expose a second-order :class:`Jet` in the state coordinates
``(t, sigma, I, s)`` (see :data:`COORDS`). The hedging code contracts these
jets with path increments; coordinates an instrument ignores get zero rows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BPoly
from scipy.special import erfcx, ndtr

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import QuadratureError

COORDS = ("t", "sigma", "I", "s")
T_, SIG, I_, S_ = range(4)

_SQRT2PI = math.sqrt(2.0 * math.pi)
_ZSPAN = 10.0
_ZCLIP = 40.0


def _npdf(x):
    return np.exp(-0.5 * x * x) / _SQRT2PI


# ---------------------------------------------------------------- payoffs


@dataclass(frozen=True, eq=False)
class Payoff:
    """European payoff ``f(S_T)`` at ``maturity``.

    ``kind`` is one of ``call``, ``put``, ``identity``, ``power``, ``tabulated``.
    Tabulated payoffs are the C^2 piecewise-quintic interpolant of
    ``(x, f, f', f'')`` samples, extended flat outside the table.
    """

    kind: str
    maturity: float
    strike: float | None = None
    exponent: float | None = None
    table: tuple | None = None
    _interp: object = field(default=None, repr=False)

    def __post_init__(self):
        if not self.maturity > 0:
            raise ValueError(f"maturity must be positive, got {self.maturity}")
        if self.kind in ("call", "put"):
            if self.strike is None or not self.strike > 0:
                raise ValueError(f"{self.kind} needs a positive strike")
        elif self.kind == "power":
            if self.exponent is None:
                raise ValueError("power payoff needs an exponent")
        elif self.kind == "tabulated":
            x, f, f1, f2 = (np.asarray(a, dtype=np.float64) for a in self.table)
            if not (x.shape == f.shape == f1.shape == f2.shape) or x.size < 2:
                raise ValueError("tabulated payoff needs equal-length x, f, f', f'' with >= 2 rows")
            if not np.all(np.diff(x) > 0) or x[0] <= 0:
                raise ValueError("tabulated x must be positive and strictly increasing")
            interp = BPoly.from_derivatives(x, np.column_stack((f, f1, f2)), extrapolate=False)
            object.__setattr__(self, "table", (x, f, f1, f2))
            object.__setattr__(self, "_interp", interp)
        elif self.kind != "identity":
            raise ValueError(f"unknown payoff kind {self.kind!r}")

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "call":
            return np.maximum(y - self.strike, 0.0)
        if self.kind == "put":
            return np.maximum(self.strike - y, 0.0)
        if self.kind == "identity":
            return y.copy()
        if self.kind == "power":
            return y**self.exponent
        x, f = self.table[0], self.table[1]
        inside = self._interp(np.clip(y, x[0], x[-1]))
        return np.where(y <= x[0], f[0], np.where(y >= x[-1], f[-1], inside))

    @property
    def kinks(self) -> np.ndarray:
        """Spot levels where the payoff is not smooth (quadrature breakpoints)."""
        if self.kind in ("call", "put"):
            return np.array([self.strike])
        if self.kind == "tabulated":
            return self.table[0]
        return np.empty(0)

    @property
    def closed_form(self) -> bool:
        return self.kind in ("call", "put", "identity")


def call(strike: float, maturity: float) -> Payoff:
    return Payoff("call", float(maturity), strike=float(strike))


def put(strike: float, maturity: float) -> Payoff:
    return Payoff("put", float(maturity), strike=float(strike))


def identity(maturity: float) -> Payoff:
    return Payoff("identity", float(maturity))


def power(exponent: float, maturity: float) -> Payoff:
    return Payoff("power", float(maturity), exponent=float(exponent))


def tabulated(x, f, f1, f2, maturity: float) -> Payoff:
    return Payoff("tabulated", float(maturity), table=(x, f, f1, f2))


def load_tabulated_csv(file, maturity: float) -> Payoff:
    """Read ``x,f,f',f''`` rows (one header line) into a tabulated payoff."""
    with open(file, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = np.array([[float(c) for c in row] for row in reader if row])
    return tabulated(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], maturity)


# ------------------------------------------------- G(s, w) and its partials


@dataclass
class SpotVarianceDerivs:
    """``G`` and ``G_s, G_ss, G_w, G_sw, G_ww`` at given ``(s, w)``."""

    g: np.ndarray
    gs: np.ndarray
    gss: np.ndarray
    gw: np.ndarray
    gsw: np.ndarray
    gww: np.ndarray


def _otm_value(s, d1, a, b):
    """Out-of-the-money call/put value ``s exp(-d1**2/2) (erfcx(a) - erfcx(b)) / 2``
    using ``K exp(-d2**2/2) = s exp(-d1**2/2)``; the Gaussian factor is applied
    last so deep wings keep their relative accuracy down to the subnormal range."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.exp(np.log(s) - 0.5 * d1 * d1 + np.log(0.5 * (erfcx(a) - erfcx(b))))


def _closed_form_derivs(payoff: Payoff, s, w) -> SpotVarianceDerivs:
    K = payoff.strike
    v = np.sqrt(w)
    d1 = (np.log(s / K) + 0.5 * w) / v
    d2 = d1 - v
    pdf = _npdf(d1)
    r2 = math.sqrt(2.0)
    if payoff.kind == "call":
        g = np.where(d1 < 0, _otm_value(s, d1, -d1 / r2, -d2 / r2), s * ndtr(d1) - K * ndtr(d2))
        gs = ndtr(d1)
    else:
        g = np.where(d2 > 0, _otm_value(s, d1, d2 / r2, d1 / r2), K * ndtr(-d2) - s * ndtr(-d1))
        gs = -ndtr(-d1)
    gss = pdf / (s * v)
    gw = 0.5 * s * pdf / v
    gsw = 0.5 * pdf / v * (1.0 - d1 / v)
    gww = 0.25 * s * pdf * (d1 * d2 - 1.0) / (v * w)
    return SpotVarianceDerivs(g, gs, gss, gw, gsw, gww)


def _closed_form_third(payoff: Payoff, s, w, with_lower: bool = False):
    """``(G_sss, G_ssw, G_sww, G_www)`` for a call or put (identical for both);
    with ``with_lower`` also ``(G_w, G_sw, G_ww)`` from the same intermediates."""
    v = np.sqrt(w)
    L = np.log(s / payoff.strike)
    d1 = (L + 0.5 * w) / v
    d2 = d1 - v
    pdf = _npdf(d1)
    dd1 = d1 * d2 - 1.0
    pv = pdf / v
    pvw = pv / w
    gsss = -pv / (s * s) * (1.0 + d1 / v)
    gssw = 0.5 * pvw / s * dd1
    gsww = 0.25 * pvw * (dd1 * (1.0 - d1 / v) + (d1 + d2) / v)
    gwww = 0.25 * s * pvw * ((dd1 + 1.0) * dd1 / (2.0 * w) - (L / w) ** 2 - 0.25 - 1.5 * dd1 / w)
    if not with_lower:
        return gsss, gssw, gsww, gwww
    lower = (0.5 * s * pv, 0.5 * pv * (1.0 - d1 / v), 0.25 * s * pvw * dd1)
    return (gsss, gssw, gsww, gwww), lower


def _identity_derivs(s, w) -> SpotVarianceDerivs:
    z = np.zeros(np.broadcast(s, w).shape)
    return SpotVarianceDerivs(s + z, 1.0 + z, z, z, z, z)


def _square_exp_derivs(s, w) -> SpotVarianceDerivs:
    e = np.exp(w)
    return SpotVarianceDerivs(s * s * e, 2 * s * e, 2 * e, s * s * e, 2 * s * e, s * s * e)


def _spot_weight_polys(sqrt_w: float, order: int) -> list[Polynomial]:
    """Polynomials ``W_n(z)`` with ``d^n/ds^n E f(Y) = E[f(Y) W_n(Z)] / s^n``
    for ``Y = s exp(sqrt(w) Z - w/2)``, obtained by differentiating the kernel."""
    polys = [Polynomial([1.0])]
    zpoly = Polynomial([0.0, 1.0])
    for n in range(order):
        wn = polys[-1]
        polys.append((zpoly * wn - wn.deriv()) / sqrt_w - n * wn)
    return polys


def _panel_rule(breaks: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Composite Gauss-Legendre nodes/weights (standard-normal weight folded in)
    over ``[breaks[0], breaks[-1]]`` with panels no wider than one unit.

    The weights are scaled by ``exp(shift)`` with ``shift = min(z**2) / 2`` so
    that far-tail windows do not underflow; the caller multiplies the result
    by ``exp(-shift)``.
    """
    xg, wg = leggauss(m)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(math.ceil(b - a)))
        edges = np.linspace(a, b, k + 1)
        half = 0.5 * np.diff(edges)[:, None]
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        nodes.append((mid + half * xg).ravel())
        weights.append((half * wg).ravel())
    z = np.concatenate(nodes)
    shift = 0.5 * float(np.min(z * z))
    return z, np.concatenate(weights) * np.exp(shift - 0.5 * z * z) / _SQRT2PI, shift


def _kernel_nodes(payoff: Payoff, s: float, w: float, n: int, m: int):
    v = math.sqrt(w)
    kinks = payoff.kinks
    if kinks.size == 0:
        z, wt = hermegauss(n)
        return z, wt / _SQRT2PI, 0.0
    zk = (np.log(kinks / s) + 0.5 * w) / v
    zk = zk[np.abs(zk) < _ZCLIP]
    lo = max(-_ZCLIP, min(-_ZSPAN, zk.min(initial=0.0) - _ZSPAN))
    hi = min(_ZCLIP, max(_ZSPAN, zk.max(initial=0.0) + _ZSPAN))
    breaks = np.unique(np.concatenate(([lo], zk, [hi])))
    return _panel_rule(breaks, m)


def _quad_point(payoff: Payoff, s: float, w: float, order: int, n: int, m: int):
    v = math.sqrt(w)
    z, wt, shift = _kernel_nodes(payoff, s, w, n, m)
    fy = payoff(s * np.exp(v * z - 0.5 * w))
    polys = _spot_weight_polys(v, order)
    est = np.empty(order + 1)
    scale = np.empty(order + 1)
    for k, poly in enumerate(polys):
        wk = poly(z)
        est[k] = np.dot(wt, fy * wk) / s**k
        scale[k] = np.dot(wt, np.abs(fy * wk)) / s**k
    if shift:
        damp = math.exp(-shift)
        est, scale = est * damp, scale * damp
    return est, scale


def lognormal_moments(payoff: Payoff, s, w, order: int = 4, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``d^k/ds^k E f(s exp(sqrt(w) Z - w/2))`` for ``k = 0..order`` by quadrature.

    Smooth payoffs use Gauss-Hermite with ``tol.quadrature_nodes`` nodes;
    payoffs with kinks use composite Gauss-Legendre split at the kinks. The
    rule is re-run with doubled nodes and a disagreement above
    ``tol.quadrature_doubling_rtol`` (relative, with a floor of ``1e-8 s**(1-k)``
    for order ``k``) raises :class:`QuadratureError`.
    Returns an array of shape ``(order + 1,) + broadcast(s, w).shape``.
    """
    s_b, w_b = np.broadcast_arrays(np.asarray(s, dtype=np.float64), np.asarray(w, dtype=np.float64))
    out = np.empty((order + 1,) + s_b.shape)
    n, m = tol.quadrature_nodes, tol.quadrature_panel_nodes
    for idx in np.ndindex(s_b.shape):
        si, wi = float(s_b[idx]), float(w_b[idx])
        lo, _ = _quad_point(payoff, si, wi, order, n, m)
        hi, scale = _quad_point(payoff, si, wi, order, 2 * n, 2 * m)
        gap = np.abs(hi - lo)
        # absolute floor: the k-th spot derivative is measured in units of s**(1 - k)
        floor = 1e-8 * si ** (1.0 - np.arange(order + 1))
        limit = tol.quadrature_doubling_rtol * np.maximum(np.abs(hi), np.maximum(1e-6 * scale, floor))
        if np.any(gap > limit + 1e-300):
            k = int(np.argmax(gap - limit))
            raise QuadratureError(
                f"node doubling disagrees for derivative order {k} at s={si:g}, w={wi:g}: "
                f"{lo[k]!r} vs {hi[k]!r}")
        out[(slice(None),) + idx] = hi
    return out


def _quadrature_derivs(payoff: Payoff, s, w, tol: Tolerances) -> SpotVarianceDerivs:
    d = lognormal_moments(payoff, s, w, 4, tol)
    g, gs, gss, gsss, gssss = d
    gw = 0.5 * s * s * gss
    gsw = s * gss + 0.5 * s * s * gsss
    gww = 0.5 * s * s * (gss + 2 * s * gsss + 0.5 * s * s * gssss)
    return SpotVarianceDerivs(g, gs, gss, gw, gsw, gww)


# ---------------------------------------------------------------- greeks / jets


@dataclass(frozen=True)
class Greeks:
    value: np.ndarray | float
    delta: np.ndarray | float
    gamma: np.ndarray | float
    theta: np.ndarray | float
    vega: np.ndarray | float
    reliable: bool = True


@dataclass
class Jet:
    """Value, gradient ``(4, n)`` and Hessian ``(4, 4, n)`` in :data:`COORDS`."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "Jet":
        return cls(np.zeros(shape), np.zeros((4,) + shape), np.zeros((4, 4) + shape))


def _as_state(t, s, sigma=None, I=None):
    s = np.asarray(s, dtype=np.float64)
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), s.shape)
    return t, s


class Instrument:
    """Quote function ``F(t, sigma, I, s)`` with exact second-order jet.

    Subclasses implement :meth:`terminal` and :meth:`_jet`; third derivatives
    are central differences of the jet Hessian.
    """

    maturity: float
    family: str = ""
    name: str = ""

    def terminal(self, s, I=None):
        raise NotImplementedError

    def _jet(self, t, s, sigma, I) -> Jet:
        raise NotImplementedError

    def jet(self, t, s, sigma=None, I=None) -> Jet:
        t, s = _as_state(t, s)
        return self._jet(t, s, sigma, I)

    def price(self, t, s, sigma=None, I=None, tol: Tolerances = DEFAULT_TOLERANCES):
        """Quote at ``t``; at or within ``tol.near_expiry`` of maturity, the payoff."""
        t, s = _as_state(t, s)
        live = self.maturity - t >= tol.near_expiry
        out = np.asarray(self.terminal(s, I), dtype=np.float64).copy()
        if np.any(live):
            sig = None if sigma is None else np.broadcast_to(sigma, s.shape)[live]
            ii = None if I is None else np.broadcast_to(I, s.shape)[live]
            out[live] = self._jet(t[live], s[live], sig, ii).value
        return out

    def increments(self, t, s, sigma, I, prices) -> np.ndarray:
        """``F(v) - F(u)`` over consecutive states, given the quotes ``prices``
        at those states. Subclasses with closed forms may avoid the
        cancellation of subtracting two large quotes."""
        return np.diff(prices)

    def greeks(self, t, s, sigma=None, I=None, tol: Tolerances = DEFAULT_TOLERANCES) -> Greeks:
        t, s = _as_state(t, s)
        if np.any(self.maturity - t < tol.near_expiry):
            nan = np.full(s.shape, np.nan)
            return Greeks(self.price(t, s, sigma, I, tol), nan, nan, nan, nan, reliable=False)
        j = self._jet(t, s, sigma, I)
        return Greeks(j.value, j.grad[S_], j.hess[S_, S_], j.grad[T_], j.grad[SIG])

    def third(self, t, s, sigma, I, active, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
        """Third partials ``(4, 4, 4, n)`` by central differences of the Hessian
        along the ``active`` coordinates (others are left zero)."""
        t, s = _as_state(t, s)
        sigma = None if sigma is None else np.broadcast_to(np.asarray(sigma, dtype=np.float64), s.shape)
        I = None if I is None else np.broadcast_to(np.asarray(I, dtype=np.float64), s.shape)
        rel = tol.third_fd_rel_step
        out = np.zeros((4, 4, 4) + s.shape)
        state = [t, sigma, I, s]
        for c in active:
            base = state[c]
            if base is None:
                continue
            if c == T_:
                h = rel * (self.maturity - t)
            elif c == I_:
                h = rel * np.maximum(np.abs(base), 1.0)
            else:
                h = rel * np.abs(base)
            up, dn = list(state), list(state)
            up[c], dn[c] = base + h, base - h
            hp = self._jet(up[0], up[3], up[1], up[2]).hess
            hm = self._jet(dn[0], dn[3], dn[1], dn[2]).hess
            out[c] = (hp - hm) / (2 * h)
        return out


    def third_directional(self, t, s, sigma, I, h, active, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
        """Third-order Taylor contributions ``(T30, T21, T12, T03)`` along the
        increment ``h`` (shape ``(4, n)``), split into slow block and spot."""
        d3 = self.third(t, s, sigma, I, active, tol)
        slow = [T_, SIG, I_]
        h1, hs = h[slow], h[S_]
        t30 = np.einsum("abcn,an,bn,cn->n", d3[np.ix_(slow, slow, slow)], h1, h1, h1) / 6.0
        t21 = np.einsum("abn,an,bn->n", d3[np.ix_(slow, slow, [S_])][:, :, 0], h1, h1) * hs / 2.0
        t12 = np.einsum("an,an->n", d3[slow, S_, S_], h1) * hs * hs / 2.0
        t03 = d3[S_, S_, S_] * hs**3 / 6.0
        return np.stack((t30, t21, t12, t03))


class EuropeanInstrument(Instrument):
    """Black-Scholes quote of a European payoff, or an exact BS-PDE solution.

    ``model`` is ``closed`` (call/put), ``identity``, ``squareExp`` or
    ``quadrature``. The volatility used is the state ``sigma`` when supplied
    (vol-path hedging), else ``self.sigma``.
    """

    def __init__(self, payoff: Payoff, sigma: float, model: str | None = None,
                 family: str = "blackScholes", name: str | None = None,
                 tol: Tolerances = DEFAULT_TOLERANCES):
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if model is None:
            model = {"call": "closed", "put": "closed", "identity": "identity"}.get(payoff.kind, "quadrature")
        self.payoff = payoff
        self.sigma = float(sigma)
        self.model = model
        self.family = family
        self.maturity = payoff.maturity
        self.name = name or (f"{payoff.kind}({payoff.strike:g})" if payoff.strike else payoff.kind)
        self.tol = tol

    def __repr__(self):
        return f"EuropeanInstrument({self.name}, sigma={self.sigma:g}, T={self.maturity:g}, {self.model})"

    def terminal(self, s, I=None):
        return self.payoff(s)

    def third_derivs(self, s, w):
        """``(G_sss, G_ssw, G_sww, G_www)`` in closed form, or ``None``."""
        if self.model == "closed":
            return _closed_form_third(self.payoff, s, w)
        if self.model == "identity":
            z = np.zeros(np.broadcast(s, w).shape)
            return z, z, z, z
        if self.model == "squareExp":
            e = np.exp(w)
            return 0.0 * s * e, 2 * e, 2 * s * e, s * s * e
        return None

    def third(self, t, s, sigma, I, active, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
        t, s = _as_state(t, s)
        sig = self.sigma if sigma is None else np.asarray(sigma, dtype=np.float64)
        tau = self.maturity - t
        w = sig * sig * tau
        g3 = self.third_derivs(s, w)
        if g3 is None:
            return super().third(t, s, sigma, I, active, tol)
        d = self.derivs(s, w)
        gsss, gssw, gsww, gwww = g3
        # partials of w in (t, sigma): first, second, third order
        wa = {T_: -sig * sig + 0.0 * tau, SIG: 2.0 * sig * tau}
        wab = {(T_, T_): 0.0 * tau, (T_, SIG): -2.0 * sig + 0.0 * tau, (SIG, SIG): 2.0 * tau}
        wabc = {(T_, SIG, SIG): -2.0}

        def w2(a, b):
            return wab[tuple(sorted((a, b)))]

        def w3(a, b, c):
            return wabc.get(tuple(sorted((a, b, c))), 0.0)

        out = np.zeros((4, 4, 4) + s.shape)
        slow = (T_, SIG)
        out[S_, S_, S_] = gsss
        for a in slow:
            v = gssw * wa[a]
            out[a, S_, S_] = out[S_, a, S_] = out[S_, S_, a] = v
            for b in slow:
                v = gsww * wa[a] * wa[b] + d.gsw * w2(a, b)
                out[a, b, S_] = out[a, S_, b] = out[S_, a, b] = v
                for c in slow:
                    out[a, b, c] = (gwww * wa[a] * wa[b] * wa[c]
                                    + d.gww * (w2(a, b) * wa[c] + w2(a, c) * wa[b] + w2(b, c) * wa[a])
                                    + d.gw * w3(a, b, c))
        return out

    def third_directional(self, t, s, sigma, I, h, active, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
        if self.model == "identity":
            return np.zeros((4,) + np.shape(s))
        t, s = _as_state(t, s)
        sig = self.sigma if sigma is None else np.asarray(sigma, dtype=np.float64)
        tau = self.maturity - t
        w = sig * sig * tau
        if self.model == "closed":
            (gsss, gssw, gsww, gwww), (gw, gsw, gww) = _closed_form_third(self.payoff, s, w, True)
        else:
            g3 = self.third_derivs(s, w)
            if g3 is None:
                return super().third_directional(t, s, sigma, I, h, active, tol)
            d = self.derivs(s, w)
            gsss, gssw, gsww, gwww = g3
            gw, gsw, gww = d.gw, d.gsw, d.gww
        ht, hv, hs = h[T_], h[SIG], h[S_]
        # derivatives of w along the slow increment (ht, hv)
        dw = -sig * sig * ht + 2.0 * sig * tau * hv
        d2w = -4.0 * sig * ht * hv + 2.0 * tau * hv * hv
        d3w = -6.0 * ht * hv * hv
        t30 = (gwww * dw * dw * dw + 3.0 * gww * dw * d2w + gw * d3w) / 6.0
        t21 = (gsww * dw * dw + gsw * d2w) * hs / 2.0
        t12 = gssw * dw * hs * hs / 2.0
        t03 = gsss * hs * hs * hs / 6.0
        return np.stack((t30, t21, t12, t03))

    def increments(self, t, s, sigma, I, prices) -> np.ndarray:
        if self.model == "identity":
            return np.diff(s)
        if self.model != "squareExp":
            return np.diff(prices)
        sig = np.broadcast_to(self.sigma if sigma is None else np.asarray(sigma, dtype=np.float64), s.shape)
        tau = self.maturity - t
        v2 = sig * sig
        # w_v - w_u without differencing two rounded variances
        dw = v2[1:] * np.diff(tau) + np.diff(v2) * tau[:-1]
        su, sv = s[:-1], s[1:]
        return np.exp(v2[:-1] * tau[:-1]) * ((sv - su) * (sv + su) * np.exp(dw) + su * su * np.expm1(dw))

    def derivs(self, s, w) -> SpotVarianceDerivs:
        if self.model == "closed":
            return _closed_form_derivs(self.payoff, s, w)
        if self.model == "identity":
            return _identity_derivs(s, w)
        if self.model == "squareExp":
            return _square_exp_derivs(s, w)
        return _quadrature_derivs(self.payoff, s, w, self.tol)

    def _jet(self, t, s, sigma, I) -> Jet:
        sig = self.sigma if sigma is None else np.asarray(sigma, dtype=np.float64)
        tau = self.maturity - t
        w = sig * sig * tau
        d = self.derivs(s, w)
        # dw/dt, dw/dsigma and second derivatives of w
        wt = -sig * sig
        ws = 2.0 * sig * tau
        wts = -2.0 * sig
        wss = 2.0 * tau
        jet = Jet.zeros(s.shape)
        jet.value[...] = d.g
        jet.grad[T_] = d.gw * wt
        jet.grad[SIG] = d.gw * ws
        jet.grad[S_] = d.gs
        h = jet.hess
        h[S_, S_] = d.gss
        h[T_, S_] = h[S_, T_] = d.gsw * wt
        h[SIG, S_] = h[S_, SIG] = d.gsw * ws
        h[T_, T_] = d.gww * wt * wt
        h[T_, SIG] = h[SIG, T_] = d.gww * wt * ws + d.gw * wts
        h[SIG, SIG] = d.gww * ws * ws + d.gw * wss
        return jet


def bs_quote(payoff: Payoff, sigma: float, t, s, tol: Tolerances = DEFAULT_TOLERANCES) -> Greeks:
    """Zero-rate Black-Scholes value and greeks of ``payoff``.

    Calls and puts use closed forms; other payoffs integrate against the
    lognormal kernel, with greeks from the differentiated kernel. Within
    ``tol.near_expiry`` of maturity the payoff is returned and the greeks are
    flagged unreliable.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > payoff.maturity):
        raise ValueError("t must lie in [0, maturity]")
    s = np.asarray(s, dtype=np.float64)
    if np.any(s <= 0):
        raise ValueError("spot must be positive")
    g = EuropeanInstrument(payoff, sigma, tol=tol).greeks(t, s, tol=tol)
    if np.ndim(g.value) == 0:
        return Greeks(*(float(x) for x in (g.value, g.delta, g.gamma, g.theta, g.vega)), reliable=g.reliable)
    return g


def analytic_instrument(name: str, sigma: float, maturity: float) -> EuropeanInstrument:
    """Exact zero-rate BS-PDE solutions used as test instruments.

    ``identity``: ``F = s``. ``squareExp``: ``F = s**2 exp(sigma**2 (T - t))``,
    the quote of the payoff ``s**2``.
    """
    if name == "identity":
        return EuropeanInstrument(identity(maturity), sigma, "identity", "analytic", "identity")
    if name == "squareExp":
        return EuropeanInstrument(power(2.0, maturity), sigma, "squareExp", "analytic", "squareExp")
    raise ValueError(f"unknown analytic instrument {name!r}")


# ---------------------------------------------------------------- residual checks


def fd_greeks(instr: Instrument, sigma: float, t, s, tol: Tolerances = DEFAULT_TOLERANCES) -> Greeks:
    """Central finite-difference greeks of ``instr.price``.

    Spot step ``max(fd_abs_step, fd_rel_step * s)``; the time step uses the
    same rule capped at half the time to maturity, one-sided (second order)
    when ``t - h < 0``.
    """
    t = np.asarray(t, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    hs = np.maximum(tol.fd_abs_step, tol.fd_rel_step * s)
    ht = np.minimum(np.maximum(tol.fd_abs_step, tol.fd_rel_step * t), 0.5 * (instr.maturity - t))
    hv = max(tol.fd_abs_step, tol.fd_rel_step * sigma)

    def f(tt, ss, sg=sigma):
        return instr.price(tt, ss, sigma=np.full(np.shape(ss), sg))

    v0 = f(t, s)
    up, dn = f(t, s + hs), f(t, s - hs)
    delta = (up - dn) / (2 * hs)
    gamma = (up - 2 * v0 + dn) / (hs * hs)
    if np.all(t - ht >= 0):
        theta = (f(t + ht, s) - f(t - ht, s)) / (2 * ht)
    else:
        # second-order one-sided stencil at t = 0
        theta = (-3 * v0 + 4 * f(t + ht, s) - f(t + 2 * ht, s)) / (2 * ht)
    vega = (f(t, s, sigma + hv) - f(t, s, sigma - hv)) / (2 * hv)
    return Greeks(v0, delta, gamma, theta, vega)


def _greeks_for_checks(instr: Instrument, sigma: float, t, s, tol: Tolerances) -> Greeks:
    if isinstance(instr, EuropeanInstrument) and instr.model != "quadrature":
        return instr.greeks(t, s, sigma=np.full(np.shape(s), sigma), tol=tol)
    return fd_greeks(instr, sigma, t, s, tol)


def pde_residual(instr: Instrument, sigma: float, t, s, tol: Tolerances = DEFAULT_TOLERANCES):
    """``theta + sigma**2 s**2 gamma / 2`` (zero for zero-rate BS prices)."""
    if np.any(np.asarray(t) >= instr.maturity) or np.any(np.asarray(s) <= 0):
        raise ValueError("need t < maturity and s > 0")
    g = _greeks_for_checks(instr, sigma, t, s, tol)
    s = np.asarray(s, dtype=np.float64)
    return g.theta + 0.5 * sigma * sigma * s * s * g.gamma


def vega_gamma_defect(instr: Instrument, sigma: float, t, s, tol: Tolerances = DEFAULT_TOLERANCES):
    """``vega - sigma (T - t) s**2 gamma`` (zero for zero-rate BS prices)."""
    g = _greeks_for_checks(instr, sigma, t, s, tol)
    s = np.asarray(s, dtype=np.float64)
    tau = instr.maturity - np.asarray(t, dtype=np.float64)
    return g.vega - sigma * tau * s * s * g.gamma
