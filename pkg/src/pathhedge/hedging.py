"""Discrete rebalancing: hedge weights, P&L ledger and its Taylor decomposition.

A run holds weights ``q^i_u`` fixed over each partition interval ``[u, v]``
(left-point evaluation, ``q^0 = -1`` on the target) and books
``sum_i q^i_u (F^i(v) - F^i(u))``. The replication error is the negative of
the ledger total: payoff minus initial target price minus hedge gains.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import NearExpiryDegeneracy, PartitionMismatch
from .paths import Partition, Path, PartitionSequence
from .pricing import COORDS, I_, S_, SIG, T_, Instrument
from .variation import oscillation, total_variation

RULES = ("delta", "deltaGamma")
FIRST = (T_, SIG, I_)
TAYLOR_INDEX = tuple((a1, a2) for a1 in range(4) for a2 in range(4) if 0 < a1 + a2 <= 3)


def compensated_cumsum(x) -> np.ndarray:
    """Running sums with Neumaier compensation; the last entry matches ``math.fsum``
    to within one rounding for any realistic input."""
    out = np.empty(len(x))
    total = 0.0
    comp = 0.0
    for k, v in enumerate(np.asarray(x, dtype=np.float64).tolist()):
        s = total + v
        if abs(total) >= abs(v):
            comp += (total - s) + v
        else:
            comp += (v - s) + total
        total = s
        out[k] = total + comp
    return out


# ---------------------------------------------------------------- weight solvers


def solve_delta_weights(target, hedges, tol: Tolerances = DEFAULT_TOLERANCES):
    """Holding in the single hedge that makes ``-delta_target + q * delta_hedge = 0``.

    ``target`` and ``hedges`` carry ``.delta`` (scalars or arrays).
    """
    if len(hedges) != 1:
        raise ValueError("delta hedging uses exactly one hedge instrument")
    hd = np.asarray(hedges[0].delta, dtype=np.float64)
    if np.any(np.abs(hd) < tol.delta_floor):
        raise ValueError("hedge delta below floor; cannot delta-hedge with it")
    q = np.asarray(target.delta, dtype=np.float64) / hd
    return q if q.ndim else float(q)


def solve_delta_gamma_weights(target, underlying, option, tol: Tolerances = DEFAULT_TOLERANCES):
    """``(q_underlying, q_option)`` zeroing portfolio delta and gamma.

    The underlying has zero gamma, so the 2x2 system is triangular:
    ``q_option = gamma_target / gamma_option`` then the underlying absorbs the
    remaining delta. Raises :class:`NearExpiryDegeneracy` when the option gamma
    is within ``tol.gamma_floor`` of zero.
    """
    go = np.asarray(option.gamma, dtype=np.float64)
    bad = ~(np.abs(go) > tol.gamma_floor)
    if np.any(bad):
        first = int(np.flatnonzero(np.atleast_1d(bad))[0])
        raise NearExpiryDegeneracy(f"hedge option gamma below floor {tol.gamma_floor:g}", first)
    ud = np.asarray(underlying.delta, dtype=np.float64)
    if np.any(np.abs(ud) < tol.delta_floor):
        raise ValueError("underlying delta below floor")
    q_opt = np.asarray(target.gamma, dtype=np.float64) / go
    q_und = (np.asarray(target.delta, dtype=np.float64) - q_opt * np.asarray(option.delta)) / ud
    if q_opt.ndim == 0:
        return float(q_und), float(q_opt)
    return q_und, q_opt


@dataclass(frozen=True)
class _View:
    delta: np.ndarray
    gamma: np.ndarray


def _view(jet) -> _View:
    return _View(jet.grad[S_], jet.hess[S_, S_])


# ---------------------------------------------------------------- ledger


@dataclass
class PnLLedger:
    level: int
    mesh: float
    times: np.ndarray
    state: dict
    weights: np.ndarray
    increments: np.ndarray
    cumulative: np.ndarray
    replication_error: float
    initial_value: float
    t_cut: float
    rule: str
    instruments: list = field(repr=False, default_factory=list)
    frozen: int = 0

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    @property
    def n_intervals(self) -> int:
        return self.increments.size


def _state_at(partition: Partition, x: Path, sigma_path: Path | None, integral: Path | None) -> dict:
    idx = x.indices_of(partition)
    state = {"t": partition.times.copy(), "s": x.values[idx]}
    for key, p in (("sigma", sigma_path), ("I", integral)):
        if p is not None:
            if not np.array_equal(p.times, x.times):
                raise PartitionMismatch(f"{key} path must share the underlying's grid")
            state[key] = p.values[idx]
    return state


def _forward_fill(valid: np.ndarray, values: np.ndarray) -> np.ndarray:
    pos = np.where(valid, np.arange(valid.size), 0)
    np.maximum.accumulate(pos, out=pos)
    return values[..., pos]


def run_hedge(x: Path, seq: PartitionSequence, level: int, instruments: list[Instrument],
              rule: str = "delta", *, sigma_path: Path | None = None, integral: Path | None = None,
              t_cut: float | None = None, on_degenerate: str = "raise",
              tol: Tolerances = DEFAULT_TOLERANCES) -> PnLLedger:
    """Rebalance along level ``level`` of ``seq`` and book the hedging P&L.

    ``instruments[0]`` is the target; ``rule="delta"`` takes one hedge,
    ``rule="deltaGamma"`` takes the underlying then a convex option.
    Weights are recomputed at partition times ``u <= t_cut`` and held after
    that; the interval ending at maturity marks every instrument to its
    payoff. ``on_degenerate="freeze"`` keeps the last good weights where the
    option gamma underflows instead of raising :class:`NearExpiryDegeneracy`.
    """
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule!r}")
    if on_degenerate not in ("raise", "freeze"):
        raise ValueError("on_degenerate must be 'raise' or 'freeze'")
    T = seq.horizon
    for ins in instruments:
        if abs(ins.maturity - T) > tol.partition_match_atol * T:
            raise ValueError(f"{ins!r} matures at {ins.maturity}, partition horizon is {T}")
    need = 2 if rule == "delta" else 3
    if len(instruments) != need:
        raise ValueError(f"rule {rule!r} needs {need} instruments (target first), got {len(instruments)}")
    if t_cut is None:
        t_cut = T - T * 2.0**-seq.max_level
    if not t_cut < T:
        raise ValueError("t_cut must be before maturity")

    partition = seq.level(level)
    state = _state_at(partition, x, sigma_path, integral)
    t, s = state["t"], state["s"]
    sig, ii = state.get("sigma"), state.get("I")
    left = slice(0, -1)
    sig_l = None if sig is None else sig[left]
    ii_l = None if ii is None else ii[left]
    jets = [ins.jet(t[left], s[left], sig_l, ii_l) for ins in instruments]

    rebal = t[left] <= t_cut
    if not rebal[0]:
        raise ValueError("t_cut precedes the first rebalance time")
    n = t.size - 1
    weights = np.empty((len(instruments), n))
    weights[0] = -1.0
    frozen = 0
    if rule == "delta":
        weights[1] = solve_delta_weights(_view(jets[0]), [_view(jets[1])], tol)
        valid = rebal
    else:
        go = jets[2].hess[S_, S_]
        ok = np.abs(go) > tol.gamma_floor
        degenerate = rebal & ~ok
        if np.any(degenerate):
            first = int(np.flatnonzero(degenerate)[0])
            if on_degenerate == "raise" or first == 0:
                raise NearExpiryDegeneracy(
                    f"option gamma below floor at t={t[first]:.10g} (level {level})", first)
            frozen = int(degenerate.sum())
        valid = rebal & ok
        safe = np.where(ok, go, 1.0)
        q_opt = jets[0].hess[S_, S_] / safe
        q_und = (jets[0].grad[S_] - q_opt * jets[2].grad[S_]) / jets[1].grad[S_]
        weights[1], weights[2] = q_und, q_opt
    weights[1:] = _forward_fill(valid, weights[1:])

    prices = np.empty((len(instruments), n + 1))
    for k, (ins, j) in enumerate(zip(instruments, jets)):
        prices[k, :-1] = j.value
        prices[k, -1] = ins.price(t[-1:], s[-1:], None if sig is None else sig[-1:],
                                  None if ii is None else ii[-1:], tol)[0]
    moves = np.stack([ins.increments(t, s, sig, ii, prices[k]) for k, ins in enumerate(instruments)])
    increments = np.sum(weights * moves, axis=0)
    cumulative = compensated_cumsum(increments)
    return PnLLedger(
        level=level, mesh=partition.mesh, times=t, state=state, weights=weights,
        increments=increments, cumulative=cumulative,
        replication_error=-float(cumulative[-1]), initial_value=float(prices[0, 0]),
        t_cut=float(t_cut), rule=rule, instruments=list(instruments), frozen=frozen)


# ---------------------------------------------------------------- Taylor decomposition


@dataclass
class TaylorDecomposition:
    """Ledger total split into the Taylor terms ``T[(a1, a2)]``.

    ``a1`` counts derivatives in the slow block ``(t, sigma, I)`` and ``a2`` in
    spot. Terms with ``a1 + a2 < 3`` use exact derivatives at the left
    endpoint; third-order terms are evaluated at ``u + lam * (v - u)`` where
    ``lam`` (per interval) makes the per-interval expansion exact.
    """

    terms: dict
    lambdas: np.ndarray
    defects: np.ndarray
    failed: np.ndarray
    ledger_total: float
    per_interval: dict = field(default_factory=dict, repr=False)

    @property
    def terms_total(self) -> float:
        return math.fsum(self.terms.values())

    @property
    def identity_gap(self) -> float:
        return self.ledger_total - self.terms_total

    def as_dict(self) -> dict:
        return {f"T{a1}{a2}": v for (a1, a2), v in self.terms.items()}


def _increments(state: dict) -> np.ndarray:
    h = np.zeros((4, state["t"].size - 1))
    for c, key in zip(range(4), COORDS):
        if key in state:
            h[c] = np.diff(state[key])
    return h


def _left(state: dict, mask=None) -> list:
    out = []
    for key in COORDS:
        v = state.get(key)
        if v is not None:
            v = v[:-1] if mask is None else v[:-1][mask]
        out.append(v)
    return out


def _third_terms(instruments, weights, left, h, lam, active, tol):
    """Per-interval third-order contributions ``(T30, T21, T12, T03)`` at
    ``left + lam * h``."""
    t, sig, ii, s = (None if b is None else b + lam * h[c] for c, b in enumerate(left))
    out = np.zeros((4, h.shape[1]))
    for q, ins in zip(weights, instruments):
        out += q * ins.third_directional(t, s, sig, ii, h, active, tol)
    return out


def taylor_decomposition(ledger: PnLLedger, tol: Tolerances = DEFAULT_TOLERANCES,
                         keep_intervals: bool = False) -> TaylorDecomposition:
    """Split ``ledger`` into Taylor terms; their sum reproduces the ledger total.

    The third-order point is located per interval by a bracketed Illinois
    iteration on ``lam``; intervals without a sign change on the scan (the
    residual is then rounding-dominated) take the scanned ``lam`` with the
    smallest mismatch and record the leftover in ``defects``.
    """
    state, weights, instruments = ledger.state, ledger.weights, ledger.instruments
    t = state["t"]
    h = _increments(state)
    n = h.shape[1]
    sig = state.get("sigma")
    ii = state.get("I")
    jets = [ins.jet(t[:-1], state["s"][:-1], None if sig is None else sig[:-1],
                    None if ii is None else ii[:-1]) for ins in instruments]
    first = list(FIRST)
    low = {k: np.zeros(n) for k in ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2))}
    for q, j in zip(weights, jets):
        g1 = np.einsum("an,an->n", j.grad[first], h[first])
        low[(1, 0)] += q * g1
        low[(0, 1)] += q * j.grad[S_] * h[S_]
        low[(2, 0)] += q * 0.5 * np.einsum("abn,an,bn->n", j.hess[np.ix_(first, first)], h[first], h[first])
        low[(1, 1)] += q * np.einsum("an,an->n", j.hess[first, S_], h[first]) * h[S_]
        low[(0, 2)] += q * 0.5 * j.hess[S_, S_] * h[S_] ** 2
    lower = sum(low.values())
    resid = ledger.increments - lower
    active = [c for c in range(4) if np.any(h[c] != 0)]

    # third-order point on the final interval must stay strictly before maturity
    lam_hi = np.ones(n)
    lam_hi[-1] = 1.0 - 1e-6

    def phi(lam, mask):
        third = _third_terms(instruments, weights[:, mask], _left(state, mask), h[:, mask], lam[mask], active, tol)
        return third.sum(axis=0) - resid[mask]

    # scan a coarse lambda grid, then refine the first sign change
    everyone = np.ones(n, dtype=bool)
    grid = np.linspace(0.0, 1.0, 5)
    lams = grid[:, None] * lam_hi[None, :]
    vals = np.stack([phi(row, everyone) for row in lams])
    scale = np.abs(resid) + np.abs(lower) + np.abs(ledger.increments)
    eps = 4 * np.finfo(float).eps * scale
    mid = 0.5 * lam_hi
    lam = mid.copy()
    fl = vals[2].copy()
    exact = np.abs(vals) <= eps
    done = exact.any(axis=0)
    k_exact = np.argmax(exact, axis=0)
    lam[done] = lams[k_exact[done], np.flatnonzero(done)]
    fl[done] = vals[k_exact[done], np.flatnonzero(done)]
    change = np.sign(vals[:-1]) != np.sign(vals[1:])
    work = ~done & change.any(axis=0)
    failed = ~done & ~work
    k = np.argmax(change, axis=0)
    cols = np.arange(n)
    lo, hi = lams[k, cols], lams[k + 1, cols]
    flo, fhi = vals[k, cols], vals[k + 1, cols]
    side = np.zeros(n, dtype=np.int8)
    for _ in range(tol.taylor_max_iter):
        if not np.any(work):
            break
        w = np.flatnonzero(work)
        c = (lo[w] * fhi[w] - hi[w] * flo[w]) / (fhi[w] - flo[w])
        c = np.where(np.isfinite(c) & (c > lo[w]) & (c < hi[w]), c, 0.5 * (lo[w] + hi[w]))
        full = np.zeros(n)
        full[w] = c
        fc = phi(full, work)
        lam[w], fl[w] = c, fc
        conv = (np.abs(fc) <= eps[w]) | (hi[w] - lo[w] <= 1e-15)
        same_lo = np.sign(fc) == np.sign(flo[w])
        new_lo = np.where(same_lo, c, lo[w])
        new_hi = np.where(same_lo, hi[w], c)
        nflo = np.where(same_lo, fc, flo[w])
        nfhi = np.where(same_lo, fhi[w], fc)
        # Illinois: halve the stale endpoint's value after two same-side steps
        nflo = np.where(~same_lo & (side[w] == -1), 0.5 * nflo, nflo)
        nfhi = np.where(same_lo & (side[w] == 1), 0.5 * nfhi, nfhi)
        side[w] = np.where(same_lo, 1, -1)
        lo[w], hi[w], flo[w], fhi[w] = new_lo, new_hi, nflo, nfhi
        work[w[conv]] = False
    # no bracket: rounding noise in the residual exceeds the reachable range;
    # the scanned point nearest the residual keeps the leftover unbiased
    best = np.argmin(np.abs(vals), axis=0)
    lam[failed] = lams[best[failed], np.flatnonzero(failed)]

    third = _third_terms(instruments, weights, _left(state), h, lam, active, tol)
    per = dict(low)
    for k, key in enumerate(((3, 0), (2, 1), (1, 2), (0, 3))):
        per[key] = third[k]
    # the third-order block absorbs whatever the root finder left over
    defects = third.sum(axis=0) - resid
    terms = {key: math.fsum(per[key]) if key in per else 0.0 for key in TAYLOR_INDEX}
    return TaylorDecomposition(
        terms=terms, lambdas=lam, defects=defects, failed=np.flatnonzero(failed),
        ledger_total=ledger.total, per_interval=per if keep_intervals else {})


# ---------------------------------------------------------------- Riemann-sum lemma


@dataclass(frozen=True)
class RiemannDefect:
    lhs: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.bound


def riemann_sum_defect(y: Path, fs: list[Path], gs: list[Path], partition: Partition) -> RiemannDefect:
    """Left-point Riemann sum ``|sum_u y_u sum_i f^i_u (g^i_v - g^i_u)|`` for a
    family with ``sum_i int f^i dg^i = 0``, against the bound
    ``sup|y| * sum_i osc(f^i, mesh) * ||g^i||_1-var``.

    Oscillation and 1-variation are read on the sampling grid; the modulus
    includes pairs exactly one mesh apart.
    """
    if len(fs) != len(gs):
        raise ValueError("need one integrand per integrator")
    yu = y.at(partition)[:-1]
    terms = np.zeros(partition.n_intervals)
    bound = 0.0
    mesh = partition.mesh
    for f, g in zip(fs, gs):
        terms += yu * f.at(partition)[:-1] * np.diff(g.at(partition))
        bound += oscillation(f, mesh, closed=True) * total_variation(g)
    lhs = abs(math.fsum(terms))
    return RiemannDefect(lhs, float(np.max(np.abs(y.values))) * bound)


# ---------------------------------------------------------------- export


def write_ledger_csv(ledger: PnLLedger, file) -> None:
    t = ledger.times
    with_i = "I" in ledger.state
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["level", "interval_index", "u", "v", "increment", "cumulative"]
        w.writerow(header + (["I_u"] if with_i else []))
        for k in range(ledger.n_intervals):
            row = [ledger.level, k, f"{t[k]:.17g}", f"{t[k + 1]:.17g}",
                   f"{ledger.increments[k]:.17g}", f"{ledger.cumulative[k]:.17g}"]
            if with_i:
                row.append(f"{ledger.state['I'][k]:.17g}")
            w.writerow(row)


def summary_record(ledger: PnLLedger, seed: int | None = None,
                   taylor: TaylorDecomposition | None = None) -> dict:
    rec = {"seed": seed, "level": ledger.level, "mesh": ledger.mesh,
           "replicationError": ledger.replication_error,
           "initialValue": ledger.initial_value, "frozen": ledger.frozen}
    if taylor is not None:
        rec["taylor"] = taylor.as_dict()
        rec["identityGap"] = taylor.identity_gap
    return rec


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True)
