"""Acceptance gate: one check per numbered criterion, each at its stated tolerance.

Every check prints a ``PASS``/``FAIL`` line (also collected in the terminal
summary). Set ``PATHHEDGE_ACCEPTANCE_OUT`` to keep the scenario outputs.
The whole module takes roughly half an hour on one core.
"""

import os

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from pathhedge import pricing as P
from pathhedge.experiments import builtin, run_scenario

HEDGE_SCENARIOS = ("delta-matched", "delta-mismatched", "gamma-fbm045", "volpath-gamma-fbm045", "asian-forward",
                   "asian-gamma-fbm045", "asian-delta-mismatch", "asian-delta-matched")


class _Cache:
    def __init__(self):
        self.results = {}
        self.root = os.environ.get("PATHHEDGE_ACCEPTANCE_OUT") or None

    def __call__(self, name):
        if name not in self.results:
            out = None if self.root is None else os.path.join(self.root, name)
            self.results[name] = run_scenario(builtin(name), out)
        return self.results[name]


@pytest.fixture(scope="module")
def scenario():
    return _Cache()


def report(tag, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{tag}] {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def _th(res, key):
    th = res.threshold(key)
    return th["pass"], th["observed"]


def test_1_quadratic_variation(scenario):
    res = scenario("qv-brownian")
    m_ok, mean16 = _th(res, "mean16")
    s_ok, slope = _th(res, "slope")
    ok = report("1", m_ok and s_ok,
                f"QV: mean |QV16 - T| = {mean16:.4g} (<= 0.01 T), slope {slope:+.3f} (-0.5 +/- 0.15)")
    assert ok


def test_2_vanishing_cubic_variation(scenario):
    res = scenario("cubic-variation")
    r_ok, ratio = _th(res, "ratio16_8")
    s_ok, slope = _th(res, "slope")
    ok = report("2", r_ok and s_ok,
                f"cubic variation: level16/level8 = {ratio:.4g} (<= 1e-2), slope {slope:+.3f} (-0.5 +/- 0.2)")
    assert ok


def _max_rel(err, scale):
    # subnormal magnitudes carry no relative precision: measure against the smallest normal double
    return float(np.max(err / np.maximum(scale, np.finfo(np.float64).tiny)))


def test_3_pricing_oracle():
    S = np.geomspace(20.0, 500.0, 25)
    TT = np.linspace(0.0, 0.99, 12)
    SG = np.geomspace(0.05, 0.8, 8)
    worst_q = worst_pde = worst_vg = 0.0
    for pay in (P.call(100.0, 1.0), P.put(100.0, 1.0)):
        for sg in SG:
            cf = P.EuropeanInstrument(pay, sg)
            qd = P.EuropeanInstrument(pay, sg, model="quadrature")
            for t in TT:
                tt = np.full_like(S, t)
                a, b = cf.jet(tt, S).value, qd.jet(tt, S).value
                worst_q = max(worst_q, _max_rel(np.abs(a - b), np.abs(a)))
                g = cf.greeks(tt, S)
                heat = 0.5 * sg * sg * S * S * g.gamma
                pde = np.abs(P.pde_residual(cf, sg, tt, S))
                worst_pde = max(worst_pde, _max_rel(pde, np.abs(g.theta) + np.abs(heat)))
                vg = np.abs(P.vega_gamma_defect(cf, sg, tt, S))
                worst_vg = max(worst_vg, _max_rel(vg, np.abs(g.vega) + np.abs(sg * (1 - t) * S * S * g.gamma)))
    ok = report("3", worst_q <= 1e-8 and worst_pde <= 1e-6 and worst_vg <= 1e-6,
                f"pricing: quadrature vs closed form {worst_q:.3g} (<= 1e-8), PDE residual {worst_pde:.3g}, "
                f"vega-gamma defect {worst_vg:.3g} (<= 1e-6)")
    assert ok


def test_4_taylor_identity(scenario):
    worst, runs = 0.0, 0
    for name in HEDGE_SCENARIOS:
        for r in scenario(name).rows:
            if r["status"] == "ok":
                worst = max(worst, r["rel_identity_gap"])
                runs += 1
    ok = report("4", worst <= 1e-9 and runs > 0,
                f"Taylor identity: max |total - sum T| / (1 + |total|) = {worst:.3g} over {runs} runs (<= 1e-9)")
    assert ok


def test_5_delta_matched(scenario):
    res = scenario("delta-matched")
    r_ok, rel = _th(res, "rel16")
    m_ok, _ = _th(res, "monotone")
    meds = [res.stat("matched", v) for v in res.config.levels]
    ok = report("5", r_ok and m_ok,
                f"delta matched: level-16 median / value = {rel:.4g} (<= 0.005), nonincreasing 8..16: {m_ok}")
    print("   medians", " ".join(f"{m:.3e}" for m in meds))
    assert ok


def test_6_delta_mismatched(scenario):
    res = scenario("delta-mismatched")
    r_ok, ratio = _th(res, "ratio16")
    ok = report("6", r_ok, f"delta mismatched: level-16 median ratio to matched = {ratio:.4g} (>= 10)")
    assert ok


def test_7_gamma_fbm(scenario):
    res = scenario("gamma-fbm045")
    r_ok, rel = _th(res, "rel16")
    f_ok, floor = _th(res, "delta_floor")
    ok = report("7", r_ok and f_ok,
                f"gamma fBm H=0.45: level-16 median / value = {rel:.4g} (<= 0.01); delta-only min level 12..16 "
                f"median / value = {floor:.4g} (>= 0.05)")
    assert ok


def test_8_volpath_gamma(scenario):
    res = scenario("volpath-gamma-fbm045")
    r_ok, rel = _th(res, "rel16")
    m_ok, _ = _th(res, "monotone")
    ok = report("8", r_ok and m_ok,
                f"vol-path gamma: level-16 median / value = {rel:.4g} (<= 0.01), nonincreasing 10..16: {m_ok}")
    assert ok


def test_9_lemma(scenario):
    res = scenario("lemma-sin")
    b_ok, violations = _th(res, "bound")
    s_ok, slope = _th(res, "slope")
    ok = report("9", b_ok and s_ok,
                f"lemma: {violations} bound violations over levels 6..16, lhs slope {slope:+.3f} (< -0.5)")
    assert ok


def test_10a_asian_gamma_neutral(scenario):
    res = scenario("asian-gamma-fbm045")
    r_ok, rel = _th(res, "rel16")
    ok = report("10a", r_ok, f"Asian gamma-neutral on fBm H=0.45: level-16 median / value = {rel:.4g} (<= 0.01)")
    assert ok


def test_10b_asian_delta_mismatch(scenario):
    res = scenario("asian-delta-mismatch")
    f_ok, floor = _th(res, "delta_floor")
    rows = [r for r in res.rows if r["leg"] == "deltaOnly"]
    warned = sum(r["qv_mismatch"] for r in rows) == len(rows)
    ok = report("10b", f_ok and warned,
                f"Asian delta-only, realized vol 0.5 vs 0.2: min level 12..16 median / value = {floor:.4g} "
                f"(>= 0.05), QV warning on every run: {warned}")
    assert ok


def test_10c_asian_forward_roundoff(scenario):
    res = scenario("asian-forward")
    u_ok, under = _th(res, "roundoff")
    s_ok, self_ = _th(res, "self_roundoff")
    ok = report("10c", u_ok and s_ok,
                f"running-average forward: max |error| / (1 + value) hedged with the underlying = {under:.3g}, "
                f"with itself = {self_:.3g} (<= 1e-9 at every level)")
    assert ok


def test_11_determinism(tmp_path):
    cfg = builtin("asian-gamma-fbm045", seeds=3, levels=[8, 9, 10, 11, 12])
    run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("summary.json", "runs.csv", "levels.csv"))
    ok = report("11", same, "determinism: repeated runs give byte-identical summary.json, runs.csv, levels.csv")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
