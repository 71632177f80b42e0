"""Scenario runner: seed batches, per-level statistics, convergence fits, thresholds.

A scenario is one JSON document (see :data:`DEFAULTS`). It names a path
model, one or more *legs* evaluated on the same seeded paths, the dyadic
levels to report, and the thresholds that decide pass/fail. Outputs are
``runs.csv`` (one row per leg, seed and level), ``levels.csv`` (per-level
aggregates) and ``summary.json``; all three are byte-reproducible from the
config.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np
from scipy import stats

from . import __version__
from .asian import ASIAN_NAMES, asian_analytic, run_asian_hedge
from .config import DEFAULT_TOLERANCES
from .errors import QVMismatchWarning
from .generators import brownian_path, exp_price_path, fbm_path, integral_path
from .hedging import riemann_sum_defect, run_hedge, taylor_decomposition, write_ledger_csv
from .paths import Path, constant_path, function_path, make_dyadic_sequence
from .pricing import EuropeanInstrument, analytic_instrument, call, power, put
from .variation import pth_variation

KINDS = ("variation", "hedge", "lemma")
THRESHOLD_TYPES = ("rel_max", "abs_max", "rel_min", "monotone", "ratio_min", "level_ratio_max", "slope",
                   "slope_max", "roundoff", "identity", "all_hold")
PATH_KINDS = ("brownian", "fbm", "gbm", "expfbm", "constant")
MAX_ERROR_RATE = 0.05

DEFAULTS = {
    "name": "custom",
    "claim": "",
    "kind": "hedge",
    "horizon": 1.0,
    "max_level": 16,
    "levels": list(range(8, 17)),
    "seeds": 100,
    "base_seed": 1,
    "path": {"kind": "gbm", "hurst": 0.5, "sigma_realized": 0.2, "s0": 100.0},
    "sigma_path": None,
    "legs": [],
    "t_cut": None,
    "on_degenerate": "freeze",
    "taylor": True,
    "thresholds": [],
    "write_ledgers": False,
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario document; ``data`` holds every field with defaults filled in."""

    data: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        data = _merge(DEFAULTS, doc)
        data["levels"] = [int(v) for v in data["levels"]]
        cfg = cls(data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, file) -> "ScenarioConfig":
        with open(file) as fh:
            return cls.from_dict(json.load(fh))

    def __getattr__(self, key):
        try:
            return self.data[key]
        except KeyError:
            raise AttributeError(key) from None

    def replace(self, **changes) -> "ScenarioConfig":
        return ScenarioConfig.from_dict(_merge(self.data, changes))

    def validate(self) -> None:
        d = self.data
        if d["kind"] not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not d["horizon"] > 0:
            raise ValueError("horizon must be positive")
        if not 1 <= d["max_level"] <= DEFAULT_TOLERANCES.max_dyadic_level:
            raise ValueError("max_level out of range")
        if not d["levels"] or any(not 1 <= v <= d["max_level"] for v in d["levels"]):
            raise ValueError(f"levels must lie in [1, {d['max_level']}]")
        if int(d["seeds"]) < 1:
            raise ValueError("seed count must be at least 1")
        if not d["legs"]:
            raise ValueError("a scenario needs at least one leg")
        names = [leg["name"] for leg in d["legs"]]
        if len(set(names)) != len(names):
            raise ValueError("leg names must be unique")
        for spec in [d["path"]] + [leg["path"] for leg in d["legs"] if "path" in leg]:
            _check_path_spec(_merge(DEFAULTS["path"], spec))
        if d["kind"] == "hedge":
            for leg in d["legs"]:
                for ins in leg["instruments"]:
                    if not ins.get("sigma", 0) > 0:
                        raise ValueError(f"instrument {ins} needs sigma > 0")
        if d["on_degenerate"] not in ("raise", "freeze"):
            raise ValueError("on_degenerate must be 'raise' or 'freeze'")
        for th in d["thresholds"]:
            if th.get("type") not in THRESHOLD_TYPES:
                raise ValueError(f"unknown threshold type {th.get('type')!r}; expected one of {THRESHOLD_TYPES}")

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


def _check_path_spec(spec: dict) -> None:
    if spec["kind"] not in PATH_KINDS:
        raise ValueError(f"path kind must be one of {PATH_KINDS}")
    if not spec["sigma_realized"] > 0:
        raise ValueError("sigma_realized must be positive")
    if not 0 < spec["hurst"] < 1:
        raise ValueError("hurst must lie in (0, 1)")
    if not spec["s0"] > 0:
        raise ValueError("s0 must be positive")


# ---------------------------------------------------------------- convergence fit


def fit_convergence(levels, medians) -> dict:
    """Least-squares slope of ``log2(median)`` against level.

    Returns ``{"slope", "stderr", "intercept"}``; if any median is not positive
    the scenario has converged to round-off and ``slope`` is the string
    ``"converged"``.
    """
    levels = np.asarray(levels, dtype=np.float64)
    medians = np.asarray(medians, dtype=np.float64)
    if levels.size != medians.size:
        raise ValueError("levels and medians differ in length")
    if levels.size < 4:
        raise ValueError("a convergence fit needs at least 4 levels")
    if np.any(~(medians > 0)):
        return {"slope": "converged", "stderr": None, "intercept": None}
    fit = stats.linregress(levels, np.log2(medians))
    return {"slope": float(fit.slope), "stderr": float(fit.stderr), "intercept": float(fit.intercept)}


# ---------------------------------------------------------------- builders


def make_path(spec: dict, seq, seed: int) -> Path:
    spec = _merge(DEFAULTS["path"], spec)
    kind, sig = spec["kind"], spec["sigma_realized"]
    if kind == "brownian":
        return brownian_path(seq, seed, scale=sig)
    if kind == "fbm":
        return fbm_path(seq, spec["hurst"], seed).map(lambda v: sig * v)
    if kind == "gbm":
        return exp_price_path(brownian_path(seq, seed), spec["s0"], sig)
    if kind == "expfbm":
        return exp_price_path(fbm_path(seq, spec["hurst"], seed), spec["s0"], sig)
    return constant_path(seq.finest, spec["s0"])


def make_sigma_path(spec: dict | None, seq) -> Path | None:
    """Deterministic volatility path; ``{"kind": "sin", "base", "amplitude", "frequency"}``."""
    if spec is None:
        return None
    if spec.get("kind", "sin") != "sin":
        raise ValueError(f"unknown sigma path kind {spec['kind']!r}")
    base, amp, freq = spec.get("base", 0.2), spec.get("amplitude", 0.05), spec.get("frequency", 1.0)
    if not base - abs(amp) > 0:
        raise ValueError("sigma path must stay positive")
    return function_path(seq.finest, lambda t: base + amp * np.sin(freq * t), "sigma")


def make_instrument(spec: dict, maturity: float):
    kind, sig = spec["type"], spec["sigma"]
    if kind in ASIAN_NAMES:
        return asian_analytic(kind, sig, maturity)
    if kind in ("identity", "squareExp"):
        return analytic_instrument(kind, sig, maturity)
    if kind == "call":
        return EuropeanInstrument(call(spec["strike"], maturity), sig)
    if kind == "put":
        return EuropeanInstrument(put(spec["strike"], maturity), sig)
    if kind == "power":
        return EuropeanInstrument(power(spec["exponent"], maturity), sig)
    raise ValueError(f"unknown instrument type {kind!r}")


# ---------------------------------------------------------------- per-run evaluation


def _nan_to_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _hedge_runs(cfg, leg, x, seq, sigma_path, integral, out_dir, seed):
    maturity = cfg.horizon
    instruments = [make_instrument(s, maturity) for s in leg["instruments"]]
    asian = leg["instruments"][0]["type"] in ASIAN_NAMES
    rows = []
    for level in cfg.levels:
        row = {"error": math.nan, "reference": math.nan, "identity_gap": math.nan,
               "rel_identity_gap": math.nan, "frozen": 0, "taylor_fallbacks": 0, "qv_mismatch": 0}
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", QVMismatchWarning)
                if asian:
                    ledger = run_asian_hedge(x, seq, level, instruments[0], instruments[1:], leg["rule"],
                                             integral=integral, t_cut=cfg.t_cut,
                                             on_degenerate=cfg.on_degenerate)
                else:
                    ledger = run_hedge(x, seq, level, instruments, leg["rule"], sigma_path=sigma_path,
                                       t_cut=cfg.t_cut, on_degenerate=cfg.on_degenerate)
            row["qv_mismatch"] = int(any(issubclass(w.category, QVMismatchWarning) for w in caught))
            row.update(error=ledger.replication_error, reference=ledger.initial_value, frozen=ledger.frozen,
                       mesh=ledger.mesh)
            if cfg.taylor:
                td = taylor_decomposition(ledger)
                row["identity_gap"] = td.identity_gap
                row["rel_identity_gap"] = abs(td.identity_gap) / (1.0 + abs(ledger.total))
                row["taylor_fallbacks"] = int(td.failed.size)
            if cfg.write_ledgers and out_dir is not None:
                ledger_dir = FsPath(out_dir) / "ledgers"
                ledger_dir.mkdir(parents=True, exist_ok=True)
                write_ledger_csv(ledger, ledger_dir / f"{leg['name']}_seed{seed}_level{level}.csv")
            row["status"] = "ok"
        except (ArithmeticError, ValueError) as exc:
            row["status"] = f"error: {type(exc).__name__}: {exc}"
        row["level"] = level
        row.setdefault("mesh", seq.horizon / 2**level)
        rows.append(row)
    return rows


def _variation_runs(cfg, leg, x, seq):
    p = float(leg.get("p", 2.0))
    center = leg.get("center")
    rows = []
    for level in cfg.levels:
        rep = pth_variation(x, seq.level(level), p, level, running=False)
        err = rep.sum - center if center is not None else rep.sum
        rows.append({"level": level, "mesh": seq.horizon / 2**level, "error": err,
                     "reference": math.nan if center is None else float(center), "status": "ok"})
    return rows


def _lemma_runs(cfg, leg, y, seq):
    """Family ``f1 = 1, g1 = h`` and ``f2 = -h', g2 = t`` with ``h = sin(freq t)``,
    so ``int f1 dg1 + int f2 dg2 = 0``."""
    freq = float(leg.get("frequency", 1.0))
    grid = seq.finest
    one = constant_path(grid, 1.0)
    h = function_path(grid, lambda t: np.sin(freq * t), "h")
    dh = function_path(grid, lambda t: -freq * np.cos(freq * t), "-h'")
    clock = function_path(grid, lambda t: t, "t")
    rows = []
    for level in cfg.levels:
        d = riemann_sum_defect(y, [one, dh], [h, clock], seq.level(level))
        rows.append({"level": level, "mesh": seq.horizon / 2**level, "error": d.lhs, "reference": d.bound,
                     "holds": int(d.holds), "status": "ok"})
    return rows


def _leg_path_spec(cfg, leg) -> dict:
    return _merge(cfg.path, leg.get("path", {}))


def run_seed(cfg: ScenarioConfig, seed: int, out_dir=None) -> list[dict]:
    """All legs and levels for one seed; paths are generated once per distinct spec."""
    seq = make_dyadic_sequence(cfg.horizon, cfg.max_level)
    sigma_path = make_sigma_path(cfg.sigma_path, seq)
    cache = {}
    rows = []
    for leg in cfg.legs:
        spec = _leg_path_spec(cfg, leg)
        key = json.dumps(spec, sort_keys=True)
        if key not in cache:
            x = make_path(spec, seq, seed)
            cache[key] = (x, integral_path(x))
        x, integral = cache[key]
        if cfg.kind == "hedge":
            leg_rows = _hedge_runs(cfg, leg, x, seq, sigma_path, integral, out_dir, seed)
        elif cfg.kind == "variation":
            leg_rows = _variation_runs(cfg, leg, x, seq)
        else:
            leg_rows = _lemma_runs(cfg, leg, x, seq)
        for r in leg_rows:
            r["leg"] = leg["name"]
            r["seed"] = seed
            r["abs_error"] = abs(r["error"]) if r["status"] == "ok" else math.nan
        rows.extend(leg_rows)
    return rows


# ---------------------------------------------------------------- aggregation


RUN_COLUMNS = ("leg", "seed", "level", "mesh", "error", "abs_error", "reference", "identity_gap",
               "rel_identity_gap", "frozen", "taylor_fallbacks", "qv_mismatch", "holds", "status")
LEVEL_COLUMNS = ("leg", "level", "mesh", "n_ok", "n_failed", "median", "mean", "q25", "q75",
                 "reference_median", "max_rel_identity_gap")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def aggregate(cfg: ScenarioConfig, rows: list[dict]) -> list[dict]:
    out = []
    for leg in cfg.legs:
        for level in cfg.levels:
            sel = [r for r in rows if r["leg"] == leg["name"] and r["level"] == level]
            ok = [r for r in sel if r["status"] == "ok"]
            a = np.array([r["abs_error"] for r in ok], dtype=np.float64)
            ref = np.array([r["reference"] for r in ok], dtype=np.float64)
            gaps = np.array([r.get("rel_identity_gap", math.nan) for r in ok], dtype=np.float64)
            rec = {"leg": leg["name"], "level": level, "mesh": cfg.horizon / 2**level,
                   "n_ok": len(ok), "n_failed": len(sel) - len(ok)}
            if a.size:
                q25, med, q75 = np.percentile(a, [25, 50, 75])
                rec.update(median=float(med), mean=float(np.mean(a)), q25=float(q25), q75=float(q75),
                           reference_median=float(np.median(ref)) if np.all(np.isfinite(ref)) else math.nan,
                           max_rel_identity_gap=float(np.max(gaps)) if np.all(np.isfinite(gaps)) else math.nan)
            else:
                rec.update(median=math.nan, mean=math.nan, q25=math.nan, q75=math.nan,
                           reference_median=math.nan, max_rel_identity_gap=math.nan)
            out.append(rec)
    return out


def _stat(levels_table, leg, level, key="median"):
    for r in levels_table:
        if r["leg"] == leg and r["level"] == level:
            return r[key]
    raise KeyError(f"level {level} of leg {leg!r} was not reported")


def evaluate_threshold(th: dict, table: list[dict], rows: list[dict]) -> dict:
    """Check one threshold against the per-level table; returns ``th`` with
    ``observed`` and ``pass`` filled in."""
    kind = th["type"]
    if kind not in THRESHOLD_TYPES:
        raise ValueError(f"unknown threshold type {kind!r}")
    leg = th.get("leg")
    res = dict(th)
    stat_key = th.get("stat", "median")
    try:
        if kind == "rel_max":
            ref = _stat(table, leg, th["level"], "reference_median")
            obs = _stat(table, leg, th["level"], stat_key) / abs(ref)
            ok = obs <= th["rel"]
        elif kind == "abs_max":
            obs = _stat(table, leg, th["level"], stat_key)
            ok = obs <= th["atol"]
        elif kind == "rel_min":
            lo, hi = th["levels"]
            obs = min(_stat(table, leg, v, stat_key) / abs(_stat(table, leg, v, "reference_median"))
                      for v in range(lo, hi + 1))
            ok = obs >= th["rel"]
        elif kind == "monotone":
            lo, hi = th["levels"]
            seq = [_stat(table, leg, v, stat_key) for v in range(lo, hi + 1)]
            obs = max(b / a for a, b in zip(seq, seq[1:]) if a > 0) if any(seq) else 0.0
            ok = all(b <= a for a, b in zip(seq, seq[1:]))
        elif kind == "ratio_min":
            obs = _stat(table, leg, th["level"], stat_key) / _stat(table, th["other"], th["level"], stat_key)
            ok = obs >= th["factor"]
        elif kind == "level_ratio_max":
            obs = _stat(table, leg, th["level"], stat_key) / _stat(table, leg, th["base_level"], stat_key)
            ok = obs <= th["factor"]
        elif kind in ("slope", "slope_max"):
            lo, hi = th["levels"]
            lv = list(range(lo, hi + 1))
            fit = fit_convergence(lv, [_stat(table, leg, v, stat_key) for v in lv])
            obs = fit["slope"]
            if obs == "converged":
                ok = kind == "slope_max"
            elif kind == "slope":
                ok = abs(obs - th["target"]) <= th["tol"]
            else:
                ok = obs <= th["max"]
        elif kind == "roundoff":
            sel = [r for r in rows if r["leg"] == leg]
            obs = max((r["abs_error"] / (1.0 + abs(r["reference"])) for r in sel if r["status"] == "ok"),
                      default=math.nan)
            ok = obs <= th["rtol"]
        elif kind == "identity":
            sel = [r for r in rows if r["status"] == "ok" and (leg is None or r["leg"] == leg)]
            obs = max((r["rel_identity_gap"] for r in sel), default=math.nan)
            ok = obs <= th["rtol"]
        else:  # all_hold
            sel = [r for r in rows if r["leg"] == leg]
            obs = sum(1 - r["holds"] for r in sel if r["status"] == "ok")
            ok = obs == 0 and all(r["status"] == "ok" for r in sel)
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        obs, ok = None, False
        res["note"] = str(exc)
    res["observed"] = _nan_to_none(float(obs)) if isinstance(obs, (int, float, np.floating)) else obs
    res["pass"] = bool(ok) and res["observed"] is not None
    return res


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list
    levels: list
    summary: dict

    @property
    def passed(self) -> bool:
        return self.summary["pass"]

    def threshold(self, key: str) -> dict:
        for th in self.summary["thresholds"]:
            if th.get("id") == key:
                return th
        raise KeyError(key)

    def stat(self, leg: str, level: int, key: str = "median") -> float:
        return _stat(self.levels, leg, level, key)

    def runs_csv(self) -> str:
        return _csv_text(RUN_COLUMNS, self.rows)

    def levels_csv(self) -> str:
        return _csv_text(LEVEL_COLUMNS, self.levels)

    def summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> None:
        out = FsPath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "runs.csv").write_text(self.runs_csv())
        (out / "levels.csv").write_text(self.levels_csv())
        (out / "summary.json").write_text(self.summary_json())


def run_scenario(config: ScenarioConfig | dict, out_dir=None, progress=None) -> ScenarioResult:
    """Run every seed, aggregate per level, fit slopes and check thresholds.

    With ``out_dir`` the three output files are written there. A scenario
    fails outright when more than 5% of its runs raise.
    """
    cfg = config if isinstance(config, ScenarioConfig) else ScenarioConfig.from_dict(config)
    rows = []
    for k in range(int(cfg.seeds)):
        seed = int(cfg.base_seed) + k
        rows.extend(run_seed(cfg, seed, out_dir))
        if progress is not None:
            progress(k + 1, int(cfg.seeds))
    table = aggregate(cfg, rows)
    n_err = sum(r["status"] != "ok" for r in rows)
    error_rate = n_err / len(rows)
    fits = {}
    for leg in cfg.legs:
        lv = [r["level"] for r in table if r["leg"] == leg["name"]]
        med = [r["median"] for r in table if r["leg"] == leg["name"]]
        try:
            fits[leg["name"]] = fit_convergence(lv, med)
        except ValueError as exc:
            fits[leg["name"]] = {"slope": None, "stderr": None, "intercept": None, "note": str(exc)}
    checks = [evaluate_threshold(th, table, rows) for th in cfg.thresholds]
    passed = error_rate <= MAX_ERROR_RATE and all(c["pass"] for c in checks)
    summary = {
        "scenario": cfg.name,
        "claim": cfg.claim,
        "version": __version__,
        "config": cfg.data,
        "tolerances": DEFAULT_TOLERANCES.as_dict(),
        "runs": len(rows),
        "errored_runs": n_err,
        "error_rate": error_rate,
        "levels": [{k: _nan_to_none(v) for k, v in r.items()} for r in table],
        "fits": fits,
        "thresholds": checks,
        "pass": passed,
    }
    result = ScenarioResult(cfg, rows, table, summary)
    if out_dir is not None:
        result.write(out_dir)
    return result


# ---------------------------------------------------------------- built-in scenarios


def _leg(name, rule, *instruments, **extra):
    return {"name": name, "rule": rule, "instruments": list(instruments), **extra}


def _call(k, sig=0.2):
    return {"type": "call", "strike": float(k), "sigma": sig}


def _ident(sig=0.2):
    return {"type": "identity", "sigma": sig}


_EXPFBM = {"kind": "expfbm", "hurst": 0.45, "sigma_realized": 0.2, "s0": 100.0}
_GBM = {"kind": "gbm", "hurst": 0.5, "sigma_realized": 0.2, "s0": 100.0}
_IDENTITY_CHECK = {"id": "identity", "type": "identity", "rtol": 1e-9}

SCENARIOS = {
    "qv-brownian": {
        "claim": "Running squared-increment sums of Brownian paths converge to T at the CLT rate",
        "kind": "variation", "seeds": 200, "taylor": False,
        "path": {"kind": "brownian", "sigma_realized": 1.0},
        "legs": [{"name": "qv", "p": 2.0, "center": 1.0}],
        "thresholds": [
            {"id": "mean16", "type": "abs_max", "leg": "qv", "level": 16, "stat": "mean", "atol": 0.01},
            {"id": "slope", "type": "slope", "leg": "qv", "levels": [8, 16], "target": -0.5, "tol": 0.15},
        ],
    },
    "cubic-variation": {
        "claim": "Brownian paths have vanishing cubic variation along dyadic partitions",
        "kind": "variation", "seeds": 200, "taylor": False,
        "path": {"kind": "brownian", "sigma_realized": 1.0},
        "legs": [{"name": "p3", "p": 3.0, "center": None}],
        "thresholds": [
            {"id": "ratio16_8", "type": "level_ratio_max", "leg": "p3", "level": 16, "base_level": 8,
             "factor": 1e-2},
            {"id": "slope", "type": "slope", "leg": "p3", "levels": [8, 16], "target": -0.5, "tol": 0.2},
        ],
    },
    "delta-matched": {
        "claim": "Delta hedging replicates when realized and pricing volatility agree",
        "path": _GBM,
        "legs": [_leg("matched", "delta", _call(100), _ident())],
        "thresholds": [
            {"id": "rel16", "type": "rel_max", "leg": "matched", "level": 16, "rel": 0.005},
            {"id": "monotone", "type": "monotone", "leg": "matched", "levels": [8, 16]},
            _IDENTITY_CHECK,
        ],
    },
    "delta-mismatched": {
        "claim": "Delta hedging is not robust to a misspecified volatility",
        "path": _GBM,
        "legs": [_leg("mismatched", "delta", _call(100, 0.3), _ident(0.3)),
                 _leg("matched", "delta", _call(100), _ident())],
        "thresholds": [
            {"id": "ratio16", "type": "ratio_min", "leg": "mismatched", "other": "matched", "level": 16,
             "factor": 10.0},
            _IDENTITY_CHECK,
        ],
    },
    "gamma-fbm045": {
        "claim": "Gamma hedging replicates along paths of vanishing cubic variation; delta hedging does not",
        "path": _EXPFBM,
        "legs": [_leg("gamma", "deltaGamma", _call(100), _ident(), _call(110)),
                 _leg("delta", "delta", _call(100), _ident())],
        "thresholds": [
            {"id": "rel16", "type": "rel_max", "leg": "gamma", "level": 16, "rel": 0.01},
            {"id": "monotone", "type": "monotone", "leg": "gamma", "levels": [10, 16]},
            {"id": "delta_floor", "type": "rel_min", "leg": "delta", "levels": [12, 16], "rel": 0.05},
            _IDENTITY_CHECK,
        ],
    },
    "volpath-gamma-fbm045": {
        "claim": "Gamma hedging with a smoothly varying implied volatility still replicates",
        "path": _EXPFBM,
        "sigma_path": {"kind": "sin", "base": 0.2, "amplitude": 0.05, "frequency": 1.0},
        "legs": [_leg("gamma", "deltaGamma", _call(100), _ident(), _call(110))],
        "thresholds": [
            {"id": "rel16", "type": "rel_max", "leg": "gamma", "level": 16, "rel": 0.01},
            {"id": "monotone", "type": "monotone", "leg": "gamma", "levels": [10, 16]},
            _IDENTITY_CHECK,
        ],
    },
    "asian-forward": {
        "claim": "The running-average forward is replicated by holding T - t units of the underlying",
        "path": _GBM,
        "legs": [_leg("underlying", "deltaOnlyQVMatched", {"type": "runningAverageForward", "sigma": 0.2},
                      _ident()),
                 _leg("self", "deltaOnlyQVMatched", {"type": "runningAverageForward", "sigma": 0.2},
                      {"type": "runningAverageForward", "sigma": 0.2})],
        "thresholds": [
            {"id": "roundoff", "type": "roundoff", "leg": "underlying", "rtol": 1e-9},
            {"id": "self_roundoff", "type": "roundoff", "leg": "self", "rtol": 1e-9},
            {"id": "monotone", "type": "monotone", "leg": "underlying", "levels": [8, 16]},
            _IDENTITY_CHECK,
        ],
    },
    "asian-gamma-fbm045": {
        "claim": "Gamma-neutral hedging of an Asian-type claim replicates along rough paths",
        "path": _EXPFBM,
        "legs": [_leg("gamma", "deltaGamma", {"type": "squaredAverage", "sigma": 0.2}, _ident(),
                      {"type": "squareExp", "sigma": 0.2})],
        "thresholds": [
            {"id": "rel16", "type": "rel_max", "leg": "gamma", "level": 16, "rel": 0.01},
            {"id": "monotone", "type": "monotone", "leg": "gamma", "levels": [10, 16]},
            _IDENTITY_CHECK,
        ],
    },
    "asian-delta-mismatch": {
        "claim": "Delta-only hedging of an Asian-type claim fails when realized variance is off-model; "
                 "gamma-neutral hedging on the same paths still converges",
        "path": {"kind": "gbm", "sigma_realized": 0.5, "s0": 100.0},
        "legs": [_leg("deltaOnly", "deltaOnlyQVMatched", {"type": "squaredAverage", "sigma": 0.2}, _ident()),
                 _leg("gamma", "deltaGamma", {"type": "squaredAverage", "sigma": 0.2}, _ident(),
                      {"type": "squareExp", "sigma": 0.2})],
        "thresholds": [
            {"id": "delta_floor", "type": "rel_min", "leg": "deltaOnly", "levels": [12, 16], "rel": 0.05},
            {"id": "gamma_rel16", "type": "rel_max", "leg": "gamma", "level": 16, "rel": 0.01},
            _IDENTITY_CHECK,
        ],
    },
    "asian-delta-matched": {
        "claim": "Delta-only hedging of an Asian-type claim replicates when quadratic variation matches",
        "path": _GBM,
        "legs": [_leg("deltaOnly", "deltaOnlyQVMatched", {"type": "squaredAverage", "sigma": 0.2}, _ident())],
        "thresholds": [
            {"id": "rel16", "type": "rel_max", "leg": "deltaOnly", "level": 16, "rel": 0.01},
            {"id": "monotone", "type": "monotone", "leg": "deltaOnly", "levels": [10, 16]},
            _IDENTITY_CHECK,
        ],
    },
    "lemma-sin": {
        "claim": "Riemann sums of an integrand annihilated by an ODE family vanish within the oscillation bound",
        "kind": "lemma", "seeds": 20, "taylor": False, "levels": list(range(6, 17)),
        "path": _GBM,
        "legs": [{"name": "sin", "frequency": 1.0}],
        "thresholds": [
            {"id": "bound", "type": "all_hold", "leg": "sin"},
            {"id": "slope", "type": "slope_max", "leg": "sin", "levels": [6, 16], "max": -0.5},
        ],
    },
}

FAMILIES = {
    "variation": ("qv-brownian", "cubic-variation"),
    "delta-hedge": ("delta-matched", "delta-mismatched"),
    "gamma-hedge": ("gamma-fbm045",),
    "vol-path-hedge": ("volpath-gamma-fbm045",),
    "asian": ("asian-forward", "asian-gamma-fbm045", "asian-delta-mismatch", "asian-delta-matched"),
    "lemma-check": ("lemma-sin",),
}


def builtin(name: str, **overrides) -> ScenarioConfig:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; see list-scenarios")
    doc = _merge({"name": name}, SCENARIOS[name])
    return ScenarioConfig.from_dict(_merge(doc, overrides))
