import itertools
import warnings

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import solve_ivp

from pathhedge import pricing as P
from pathhedge.asian import (AsianInstrument, asian_analytic, asian_pde_residual, convexity_coefficient,
                             realized_log_variance, run_asian_hedge)
from pathhedge.errors import QVMismatchWarning
from pathhedge.generators import brownian_path, exp_price_path, fbm_path, integral_path
from pathhedge.hedging import taylor_decomposition
from pathhedge.paths import make_dyadic_sequence
from pathhedge.pricing import I_, S_, T_, Instrument


@pytest.fixture(scope="module")
def seq():
    return make_dyadic_sequence(1.0, 16)


def _lattice():
    t = np.linspace(0.0, 0.99, 12)
    I = np.linspace(0.0, 300.0, 7)
    X = np.geomspace(20.0, 500.0, 9)
    return [a.ravel() for a in np.meshgrid(t, I, X, indexing="ij")]


@pytest.mark.parametrize("name", ["runningAverageForward", "squaredAverage"])
@pytest.mark.parametrize("sigma", [0.05, 0.2, 0.8])
def test_pde_residual_on_lattice(name, sigma):
    t, I, X = _lattice()
    r = asian_pde_residual(asian_analytic(name, sigma), t, I, X, relative=True)
    assert np.max(r) <= 1e-9


def test_convexity_coefficient_against_ode():
    for sigma in (0.05, 0.3, 1.5):
        taus = np.linspace(0.0, 2.0, 41)
        sol = solve_ivp(lambda tau, b: sigma**2 * (b + tau**2), (0, 2), [0.0], t_eval=taus,
                        rtol=1e-12, atol=1e-16, method="DOP853")
        b = convexity_coefficient(sigma, taus)[0]
        np.testing.assert_allclose(b, sol.y[0], rtol=1e-9, atol=1e-15)


def test_convexity_coefficient_series_branch_is_continuous():
    sigma = 1.0
    x = np.array([0.1 * (1 - 1e-12), 0.1, 0.1 * (1 + 1e-12)])
    b, b1 = convexity_coefficient(sigma, x)[:2]
    assert np.all(np.abs(np.diff(b) - b1[1] * np.diff(x)) <= 1e-13 * b[1])
    # small tau: b ~ sigma**2 tau**3 / 3
    tau = 1e-6
    assert convexity_coefficient(0.4, tau)[0] == pytest.approx(0.16 * tau**3 / 3, rel=1e-6)


def test_squared_average_symbolic():
    t, I, X, sig, T = sp.symbols("t I X sigma T", positive=True)
    tau = T - t
    x = sig**2 * tau
    b = 2 * (sp.exp(x) - 1 - x - x**2 / 2) / sig**4
    F = (I + X * tau) ** 2 + b * X**2
    pde = sp.diff(F, t) + X * sp.diff(F, I) + sig**2 * X**2 * sp.diff(F, X, 2) / 2
    assert sp.simplify(pde) == 0
    assert sp.simplify(F.subs(t, T) - I**2) == 0
    ins = AsianInstrument("squaredAverage", 0.3, 1.0)
    vals = {t: 0.25, I: 40.0, X: 90.0, sig: 0.3, T: 1.0}
    jet = ins.jet(np.array([0.25]), np.array([90.0]), None, np.array([40.0]))
    syms = {T_: t, I_: I, S_: X}
    for a, b_ in itertools.product(syms, repeat=2):
        want = float(sp.diff(F, syms[a], syms[b_]).subs(vals))
        assert jet.hess[a, b_][0] == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_third_directional_matches_generic():
    sq = asian_analytic("squaredAverage", 0.2, 1.0)
    t = np.array([0.0, 0.3, 0.9, 0.99])
    X = np.array([50.0, 100.0, 300.0, 20.0])
    I = np.array([0.0, 40.0, 200.0, 10.0])
    h = np.array([[0.01] * 4, [0.0] * 4, [0.7, 1.0, 2.0, 0.3], [1.5, -2.0, 3.0, 0.5]])
    fast = sq.third_directional(t, X, None, I, h, [T_, I_, S_]).sum(axis=0)
    slow = Instrument.third_directional(sq, t, X, None, I, h, [T_, I_, S_]).sum(axis=0)
    np.testing.assert_allclose(fast, slow, rtol=1e-5, atol=1e-9)


def test_argument_checks():
    with pytest.raises(ValueError):
        asian_analytic("asianCall", 0.2)
    with pytest.raises(ValueError):
        asian_analytic("squaredAverage", 0.0)
    with pytest.raises(ValueError):
        asian_analytic("squaredAverage", 0.2).terminal(np.ones(3))


def test_forward_at_maturity_is_running_integral():
    fw = asian_analytic("runningAverageForward", 0.2, 1.0)
    I = np.array([0.0, 13.0, 250.0])
    np.testing.assert_array_equal(fw.price(np.ones(3), np.array([1.0, 50.0, 90.0]), None, I), I)
    sq = asian_analytic("squaredAverage", 0.2, 1.0)
    np.testing.assert_allclose(sq.price(np.ones(3), np.array([1.0, 50.0, 90.0]), None, I), I * I)


def test_target_hedged_with_itself_is_exact(seq):
    x = exp_price_path(brownian_path(seq, 2), 100.0, 0.2)
    fw = asian_analytic("runningAverageForward", 0.2, 1.0)
    for level in (6, 12, 16):
        led = run_asian_hedge(x, seq, level, fw, [fw], "deltaOnlyQVMatched")
        assert led.replication_error == 0.0


def test_increments_are_exact_differences(seq):
    x = exp_price_path(brownian_path(seq, 2), 100.0, 0.2)
    I = integral_path(x)
    p = seq.level(10)
    t, s, ii = p.times, x.at(p), I.at(p)
    for name in ("runningAverageForward", "squaredAverage"):
        ins = asian_analytic(name, 0.2, 1.0)
        prices = ins.price(t, s, None, ii)
        inc = ins.increments(t, s, None, ii, prices)
        np.testing.assert_allclose(inc, np.diff(prices), rtol=1e-9, atol=1e-12 * np.max(np.abs(prices)))


def test_qv_warning(seq):
    sq = asian_analytic("squaredAverage", 0.2, 1.0)
    und = P.analytic_instrument("identity", 0.2, 1.0)
    wild = exp_price_path(brownian_path(seq, 3), 100.0, 0.5)
    with pytest.warns(QVMismatchWarning):
        run_asian_hedge(wild, seq, 8, sq, [und], "deltaOnlyQVMatched")
    tame = exp_price_path(brownian_path(seq, 3), 100.0, 0.2)
    assert abs(realized_log_variance(tame) - 0.04) < 0.05 * 0.04
    with warnings.catch_warnings():
        warnings.simplefilter("error", QVMismatchWarning)
        run_asian_hedge(tame, seq, 8, sq, [und], "deltaOnlyQVMatched")
        run_asian_hedge(wild, seq, 8, sq, [und, P.analytic_instrument("squareExp", 0.2, 1.0)])
    with pytest.raises(ValueError):
        run_asian_hedge(tame, seq, 8, sq, [und], "delta")


def test_gamma_hedge_converges_on_rough_path(seq):
    sq = asian_analytic("squaredAverage", 0.2, 1.0)
    hedges = [P.analytic_instrument("identity", 0.2, 1.0), P.analytic_instrument("squareExp", 0.2, 1.0)]
    x = exp_price_path(fbm_path(seq, 0.45, 3), 100.0, 0.2)
    errs = []
    for level in (8, 12, 16):
        led = run_asian_hedge(x, seq, level, sq, hedges)
        td = taylor_decomposition(led)
        assert abs(td.identity_gap) <= 1e-9 * (1 + abs(led.total))
        errs.append(abs(led.replication_error) / led.initial_value)
    assert errs[2] < errs[1] < errs[0] and errs[2] < 1e-3
