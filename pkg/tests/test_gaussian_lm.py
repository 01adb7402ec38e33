import math

import numpy as np
import pytest
from scipy import stats

from lrcd.gaussian_lm import (
    CirculantEmbeddingError, LongMemoryGaussianSpec, ParameterError, _embedding_sqrt_eigs,
    autocovariance_h, generate_path, generate_paths, ma_coefficients,
)


def test_ma_coefficients_first_terms():
    np.testing.assert_allclose(ma_coefficients(0.3, 3), [1.0, 0.3, 0.195])
    assert ma_coefficients(0.45, 2)[1] == pytest.approx(0.45)


def test_ma_coefficients_asymptotic_ratio():
    # frozen from the recursion itself: b_200 / b_100 = 0.61590 vs 2^(d-1) = 0.61557
    b = ma_coefficients(0.3, 201)
    assert b[200] / b[100] == pytest.approx(2 ** (0.3 - 1), rel=0.01)


def test_ma_coefficients_times_power_converge():
    b = ma_coefficients(0.3, 2 ** 14)
    j = np.array([2 ** 10, 2 ** 12, 2 ** 14 - 1])
    scaled = b[j] * j ** 0.7
    assert np.all(np.diff(scaled) > 0) or np.all(np.diff(scaled) < 0)
    assert scaled[-1] == pytest.approx(1 / math.gamma(0.3), rel=1e-3)


@pytest.mark.parametrize("d", [0.0, -0.1, 0.5, 0.7])
def test_ma_coefficients_reject_bad_d(d):
    with pytest.raises(ParameterError):
        ma_coefficients(d, 5)


@pytest.mark.parametrize("kw", [dict(d=0.5), dict(d=-0.01), dict(d=0.2, sigma_e=0.0),
                                dict(d=0.0, a=1.0), dict(d=0.2, coeff_scale=0.0)])
def test_spec_invariants(kw):
    with pytest.raises(ParameterError):
        LongMemoryGaussianSpec(**kw)


def test_geometric_variance():
    spec = LongMemoryGaussianSpec(d=0.0, sigma_e=1.0, a=0.5)
    assert autocovariance_h(spec, 0) == pytest.approx(4.0 / 3.0)
    assert autocovariance_h(spec, 3) == pytest.approx(4.0 / 3.0 * 0.125)


@pytest.mark.parametrize("d", [0.0, 0.1, 0.3, 0.45])
def test_autocovariance_symmetric(d):
    spec = LongMemoryGaussianSpec(d=d, a=0.4)
    lags = np.arange(0, 40)
    np.testing.assert_array_equal(autocovariance_h(spec, lags), autocovariance_h(spec, -lags))


def test_autocovariance_doubling_ratio_gamma_oracle():
    spec = LongMemoryGaussianSpec(d=0.3)
    for s in (512, 1024):
        # oracle: math.lgamma evaluation of Gamma(s+d)/Gamma(s+1-d)
        lr = lambda k: math.lgamma(k + 0.3) - math.lgamma(k + 0.7)
        oracle = math.exp(lr(2 * s) - lr(s))
        ratio = autocovariance_h(spec, 2 * s) / autocovariance_h(spec, s)
        assert ratio == pytest.approx(oracle, rel=1e-10)
        assert ratio == pytest.approx(2 ** (2 * 0.3 - 1), rel=1e-4)


def _tail_sum_correction(d, J, s):
    """Integral approximation of sum_{j>=J} b_j b_{j+s} with b_j ~ j^(d-1)/Gamma(d)."""
    c = 1.0 / math.gamma(d) ** 2
    # sum_{j>=J} j^(2d-2) (1 + s/j)^(d-1) ~ integral from J - 1/2; s << J
    x0 = J - 0.5
    return c * x0 ** (2 * d - 1) / (1 - 2 * d) * (1 + (d - 1) * s * (1 - 2 * d) / (2 - 2 * d) / x0)


@pytest.mark.parametrize("d", [0.1, 0.3, 0.45])
def test_truncated_ma_matches_closed_form(d):
    J = 10 ** 5
    spec = LongMemoryGaussianSpec(d=d, sigma_e=1.3)
    b = ma_coefficients(d, J + 5)
    for s in (0, 1, 5):
        trunc = float(b[:J] @ b[s:J + s]) * spec.sigma_e ** 2
        # the tail beyond J decays like J^(2d-1): ~1% of r_0 at d=0.3, ~20% at d=0.45
        trunc += _tail_sum_correction(d, J, s) * spec.sigma_e ** 2
        assert trunc == pytest.approx(autocovariance_h(spec, s), rel=0.005)


def test_autocovariance_power_law_scaling():
    spec = LongMemoryGaussianSpec(d=0.3)
    s = 2.0 ** np.arange(6, 13)
    scaled = autocovariance_h(spec, s) * s ** (1 - 2 * 0.3)
    drift = np.abs(np.diff(scaled)) / scaled[:-1]
    assert np.all(scaled > 0)
    assert np.all(drift < 0.02)


def test_with_variance_sets_r0():
    spec = LongMemoryGaussianSpec.with_variance(0.3, 0.5)
    assert spec.variance == pytest.approx(0.5, rel=1e-12)


def test_degenerate_noise_path_is_tiny():
    spec = LongMemoryGaussianSpec(d=0.3, sigma_e=1e-12)
    assert np.all(np.abs(generate_path(spec, 1000, 1).values) < 1e-6)


def test_generate_path_deterministic(g03):
    a = generate_path(g03, 777, 42).values
    b = generate_path(g03, 777, 42).values
    c = generate_path(g03, 777, 43).values
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert len(generate_path(g03, 777, 42)) == 777


@pytest.mark.parametrize("n", [1, 2, 3, 10])
def test_small_lengths(g03, n):
    assert generate_path(g03, n, 0).values.shape == (n,)


def test_eigenvalue_guard():
    spec = LongMemoryGaussianSpec(d=0.0, a=-0.9)
    # an alternating AR(1) kernel embeds fine; corrupt the cache input to force failure
    _embedding_sqrt_eigs(spec, 8)
    err = CirculantEmbeddingError(-1.0, 2.0)
    assert "-1" in str(err) and err.eigenvalue == -1.0


def test_eigenvalue_guard_triggers(monkeypatch):
    import lrcd.gaussian_lm as g

    spec = LongMemoryGaussianSpec(d=0.2, sigma_e=0.77)
    # a sequence that is not a valid autocovariance: r_1 > r_0
    monkeypatch.setattr(g, "autocovariance_h",
                        lambda s, lag: np.where(np.asarray(lag) == 1, 2.0, 0.0) + (np.asarray(lag) == 0))
    g._embedding_sqrt_eigs.cache_clear()
    with pytest.raises(CirculantEmbeddingError) as info:
        g._embedding_sqrt_eigs(spec, 16)
    assert info.value.eigenvalue < 0
    g._embedding_sqrt_eigs.cache_clear()


@pytest.mark.slow
def test_sample_autocovariance_matches(g03):
    reps, n = 200, 2 ** 14
    x = generate_paths(g03, n, reps, np.random.default_rng(9))
    for lag in (1, 10, 100):
        # per-path lag products at known zero mean
        per_path = np.mean(x[:, : n - lag] * x[:, lag:], axis=1)
        est, se = per_path.mean(), per_path.std(ddof=1) / np.sqrt(reps)
        assert abs(est - autocovariance_h(g03, lag)) < 3 * se


def test_marginal_is_gaussian(g03):
    x = generate_paths(g03, 2 ** 12, 25, np.random.default_rng(4)).ravel()
    z = x / math.sqrt(g03.variance)
    # paths are independent across rows; kurtosis SE for n iid normals is sqrt(24/n)
    kurt = np.mean(z ** 4)
    n_eff = x.size
    assert abs(kurt - 3.0) < 3 * math.sqrt(24.0 / n_eff) * 3  # long memory inflates the SE
    assert abs(x.mean()) < 0.05
    assert stats.skew(x) == pytest.approx(0.0, abs=0.05)
