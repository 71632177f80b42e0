import numpy as np
import pytest
from scipy.stats import norm

from pathhedge import rng
from pathhedge.errors import EmbeddingError
from pathhedge.generators import (brownian_path, circulant_eigenvalues, exp_price_path, fbm_covariance,
                                  fbm_exact, fbm_path, integral_path)
from pathhedge.paths import constant_path, function_path, make_dyadic_sequence
from pathhedge.variation import pth_variation


def test_normals_are_inverse_cdf_of_centred_uniforms():
    u = rng.uniforms(rng.stream(7), 1000)
    assert np.all((u > 0) & (u < 1))
    np.testing.assert_array_equal(rng.normals(rng.stream(7), 1000), norm.ppf(u))


def test_brownian_deterministic_per_seed():
    seq = make_dyadic_sequence(1.0, 10)
    a, b = brownian_path(seq, 3), brownian_path(seq, 3)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, brownian_path(seq, 4).values)


@pytest.mark.parametrize("scale", [0.0, -1.0])
def test_brownian_scale_must_be_positive(scale):
    with pytest.raises(ValueError):
        brownian_path(make_dyadic_sequence(1.0, 4), 0, scale)


def test_brownian_increment_variance():
    # 200 seeds at level 16: mean squared increment vs scale**2 dt, 3 standard errors
    seq = make_dyadic_sequence(1.0, 16)
    scale = 0.7
    dt = 2.0**-16
    est = np.array([np.mean(np.diff(brownian_path(seq, s, scale).values) ** 2) for s in range(200)])
    se = np.sqrt(2.0) * scale**2 * dt / np.sqrt(200 * 2**16)
    assert abs(est.mean() - scale**2 * dt) < 3 * se


def test_fbm_exact_matches_covariance():
    times = np.linspace(0, 1, 65)
    x = np.stack([fbm_exact(times, 0.3, s) for s in range(500)])
    cov = fbm_covariance(times[1:], 0.3)
    emp = x[:, 1:].T @ x[:, 1:] / 500
    se = np.sqrt((cov**2 + np.outer(np.diag(cov), np.diag(cov))) / 500)
    assert np.max(np.abs(emp - cov) / se) < 5


@pytest.mark.parametrize("hurst", [0.3, 0.45, 0.7])
def test_fbm_spectral_covariance_64_points(hurst):
    # empirical covariance of the circulant-embedding sampler vs the analytic kernel
    seq = make_dyadic_sequence(1.0, 6)
    x = np.stack([fbm_path(seq, hurst, s).values[1:] for s in range(500)])
    cov = fbm_covariance(seq.finest.times[1:], hurst)
    emp = x.T @ x / 500
    se = np.sqrt((cov**2 + np.outer(np.diag(cov), np.diag(cov))) / 500)
    assert np.max(np.abs(emp - cov) / se) < 5


def test_fbm_half_is_brownian_in_distribution():
    seq = make_dyadic_sequence(1.0, 16)
    dt = 2.0**-16
    est = np.array([np.mean(np.diff(fbm_path(seq, 0.5, s).values) ** 2) for s in range(200)])
    se = np.sqrt(2.0) * dt / np.sqrt(200 * 2**16)
    assert abs(est.mean() - dt) < 3 * se


def test_circulant_embedding_nonnegative_and_hurst_range():
    for h in (0.1, 0.45, 0.5, 0.9):
        lam = circulant_eigenvalues(h, 2**10)
        assert lam.min() > -1e-10 * lam.max()
    with pytest.raises(ValueError):
        fbm_path(make_dyadic_sequence(1.0, 4), 1.0, 0)


def test_fbm_exact_size_guard():
    with pytest.raises(EmbeddingError):
        fbm_exact(np.linspace(0, 1, 2**12 + 2), 0.3, 0)


def test_fbm_pth_variation_scaling():
    # |dX| ~ dt**H: p above 1/H decreases with level, below increases
    H = 0.45
    seq = make_dyadic_sequence(1.0, 14)
    x = fbm_path(seq, H, 11)
    up = [pth_variation(x, seq.level(n), 1 / H + 0.5).sum for n in (8, 11, 14)]
    down = [pth_variation(x, seq.level(n), 1 / H - 0.3).sum for n in (8, 11, 14)]
    assert up[0] > up[1] > up[2]
    assert down[0] < down[1] < down[2]


def test_fbm_deterministic():
    seq = make_dyadic_sequence(1.0, 12)
    np.testing.assert_array_equal(fbm_path(seq, 0.45, 5).values, fbm_path(seq, 0.45, 5).values)


def test_exp_price_path():
    seq = make_dyadic_sequence(1.0, 8)
    zero = constant_path(seq.finest, 0.0)
    np.testing.assert_array_equal(exp_price_path(zero, 100.0, 0.3).values, 100.0)
    with pytest.raises(ValueError):
        exp_price_path(zero, 0.0, 0.3)


def test_log_price_qv():
    seq = make_dyadic_sequence(1.0, 16)
    qv = [pth_variation(exp_price_path(brownian_path(seq, s), 50.0, 0.3).map(np.log), seq.finest, 2).sum
          for s in range(20)]
    assert np.mean(qv) == pytest.approx(0.09, rel=0.01)


def test_integral_of_constant_and_linear():
    seq = make_dyadic_sequence(2.0, 8)
    t = seq.finest.times
    np.testing.assert_allclose(integral_path(constant_path(seq.finest, 3.0)).values, 3 * t, rtol=1e-14)
    lin = function_path(seq.finest, lambda s: 1.5 * s)
    np.testing.assert_allclose(integral_path(lin).values, 0.75 * t**2, rtol=1e-13, atol=1e-15)
    assert integral_path(lin).values[0] == 0.0


def test_integral_of_brownian_has_vanishing_variation():
    seq = make_dyadic_sequence(1.0, 16)
    i = integral_path(brownian_path(seq, 2))
    v = [pth_variation(i, seq.level(n), 1.1).sum for n in (6, 10, 14, 16)]
    assert all(b < a for a, b in zip(v, v[1:]))
