import numpy as np
import pytest

from ladcurves.dgp import Dataset, DesignSpec, ErrorModel, TrueCurves, synthesize_dataset
from ladcurves.estimate import (CurveEstimate, FitConfig, fit_curves, fit_local_mean, fit_mu_curve,
                                fit_mu_jackknife, fit_mu_raw, fit_s_alternative, fit_s_jackknife, fit_s_raw)
from ladcurves.exceptions import (ConfigurationError, DegenerateFitError, ExtrapolationError,
                                  NoMassError)
from ladcurves.kernel import KernelSpec
from ladcurves.lad_core import weighted_median


@pytest.fixture
def noisy():
    curves = TrueCurves.linear(slope=1.0, s0=0.5)
    return synthesize_dataset(DesignSpec.balanced(20, 25), curves, ErrorModel.iid(), seed=1)


def test_raw_fit_is_weighted_median_of_window(noisy):
    x, b = 0.4, 0.1
    xs, ys, _ = noisy.pooled
    w = KernelSpec()((xs - x) / b)
    assert fit_mu_raw(noisy, x, b) == weighted_median(ys, w)


def test_jackknife_combination(noisy):
    x, b = 0.5, 0.08
    assert fit_mu_jackknife(noisy, x, b) == 2 * fit_mu_raw(noisy, x, b) - fit_mu_raw(noisy, x, np.sqrt(2) * b)


def test_noise_free_constant_recovered_exactly():
    c = TrueCurves.constant(mu0=2.5, s0=1.0)
    xs = [np.linspace(0, 1, 50)]
    d = Dataset.from_arrays(xs, [c.mu(xs[0])], domain=(0, 1))
    assert fit_mu_raw(d, 0.5, 0.1) == 2.5
    assert fit_mu_jackknife(d, 0.5, 0.1) == 2.5
    assert fit_s_raw(d, 0.5, 0.1, 2.5) == 0.0


def test_noise_free_linear_within_window_modulus():
    xs = [np.linspace(0, 1, 401)]
    d = Dataset.from_arrays(xs, [3 * xs[0]], domain=(0, 1))
    for x in (0.3, 0.5, 0.71):
        assert abs(fit_mu_raw(d, x, 0.05) - 3 * x) <= 3 * 1 / 400


def test_scale_fits(noisy):
    x, h = 0.5, 0.1
    xs, ys, _ = noisy.pooled
    mu = fit_mu_jackknife(noisy, x, 0.1)
    w = KernelSpec()((xs - x) / h)
    assert fit_s_raw(noisy, x, h, mu) == weighted_median(np.abs(ys - mu), w)
    assert fit_s_jackknife(noisy, x, h, mu) == 2 * fit_s_raw(noisy, x, h, mu) - fit_s_raw(noisy, x, np.sqrt(2) * h, mu)
    with pytest.raises(ConfigurationError):
        fit_s_raw(noisy, x, h, np.nan)


def test_alternative_scale_uses_interpolated_centre(noisy):
    grid = np.linspace(0, 1, 101)
    mu_curve = fit_mu_curve(noisy, grid, 0.1)
    xs, ys, _ = noisy.pooled
    x, h = 0.5, 0.1
    w = KernelSpec()((xs - x) / h)
    keep = w > 0
    ref = weighted_median(np.abs(ys[keep] - mu_curve.interpolate(xs[keep])), w[keep])
    assert fit_s_alternative(noisy, x, h, mu_curve) == ref
    narrow = CurveEstimate(np.linspace(0.45, 0.55, 5), np.zeros(5), "MuJackknife")
    with pytest.raises(ExtrapolationError):
        fit_s_alternative(noisy, x, h, narrow)


def test_local_mean(noisy):
    xs, ys, _ = noisy.pooled
    w = KernelSpec()((xs - 0.3) / 0.1)
    assert fit_local_mean(noisy, 0.3, 0.1) == pytest.approx(np.sum(w * ys) / np.sum(w), rel=1e-12)


def test_empty_window_raises():
    d = Dataset.from_arrays([[0.0, 1.0]], [[0.0, 1.0]], domain=(0, 1))
    with pytest.raises(NoMassError):
        fit_mu_raw(d, 0.5, 0.1)
    with pytest.raises(NoMassError):
        fit_local_mean(d, 0.5, 0.1)


def test_fit_curves_default_grid_and_nan_gaps():
    xs = [np.r_[np.linspace(0, 0.3, 40), np.linspace(0.7, 1, 40)]]
    d = Dataset.from_arrays(xs, [np.zeros(80)], domain=(0, 1))
    mu, s = fit_curves(d, FitConfig(0.05, 0.05, grid_size=51))
    eps = np.sqrt(2) * 0.05
    assert mu.grid[0] == pytest.approx(eps) and mu.grid[-1] == pytest.approx(1 - eps)
    gap = (mu.grid > 0.36) & (mu.grid < 0.64)
    assert np.all(np.isnan(mu.values[gap])) and np.all(mu.n_effective[gap] == 0)
    assert np.all(mu.values[~mu.missing] == 0)
    assert mu.estimator == "MuJackknife" and s.estimator == "SJackknife"


def test_fit_curves_flags_and_clamps_negative_scale():
    rng = np.random.default_rng(3)
    xs = [np.sort(rng.random(15)) for _ in range(3)]
    ys = [rng.standard_cauchy(15) for _ in range(3)]
    d = Dataset.from_arrays(xs, ys, domain=(0, 1))
    _, s = fit_curves(d, FitConfig(0.1, 0.1, grid_size=201))
    _, sc = fit_curves(d, FitConfig(0.1, 0.1, grid_size=201, clamp_negative_scale=True))
    np.testing.assert_array_equal(s.flags, sc.flags)
    assert np.all(sc.values[sc.flags] == 0)
    assert np.all(s.values[s.flags] < 0)


def test_fit_config_validation(noisy):
    with pytest.raises(ConfigurationError):
        FitConfig(0.0, 0.1)
    with pytest.raises(ConfigurationError):
        FitConfig(0.6, 0.1).resolve_grid((0, 1))
    with pytest.raises(ConfigurationError):
        fit_curves(noisy, FitConfig(0.1, 0.1, grid=[0.05, 0.5]))


def test_degenerate_fit():
    d = Dataset.from_arrays([[0.0, 1.0]], [[0.0, 1.0]], domain=(0, 1))
    with pytest.raises(DegenerateFitError):
        fit_curves(d, FitConfig(0.05, 0.05, grid_size=5))


def test_curve_interpolate_bounds():
    c = CurveEstimate([0, 1, 2], [0, np.nan, 4], "MuRaw")
    assert c.interpolate(1.0) == 2.0
    with pytest.raises(ExtrapolationError):
        c.interpolate(2.5)
    with pytest.raises(ConfigurationError):
        CurveEstimate([0], [0], "Nope")
