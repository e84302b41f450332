import numpy as np
import pytest

from coupledmc.estimators import (
    ExtendedObservable,
    batch_means_variance,
    one_particle_sigma_quadrature,
    pooled_variance_report,
    replicate_sweep,
)
from coupledmc.models import Observable


def test_constant_series_zero_variance():
    rep = batch_means_variance(np.full(5000, 2.5), 0.1, 50)
    assert rep.asym_var == 0.0
    assert rep.ci_halfwidth == 0.0
    assert rep.mean == pytest.approx(2.5)


def test_white_noise_calibration_fixed_seed():
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(1)))
    series = rng.standard_normal(100_000)
    rep = batch_means_variance(series, 1.0, 50)
    assert abs(rep.asym_var - 1.0) < 0.2


def test_white_noise_calibration_averaged():
    # averaging over 8 streams brings the estimator sd to ~7%
    estimates = []
    for seed in range(8):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        estimates.append(batch_means_variance(rng.standard_normal(100_000), 1.0, 50).asym_var)
    assert abs(np.mean(estimates) - 1.0) < 0.15


def test_short_series_rejected():
    with pytest.raises(ValueError, match="series too short"):
        batch_means_variance(np.zeros(100), 0.1, 50)


def test_extended_observable_is_exact_mean():
    f = Observable(lambda x: np.asarray(x, dtype=float) ** 2, lambda x: 2 * np.asarray(x, dtype=float), 1.0)
    F = ExtendedObservable(f, 4)
    states = np.array([[1.0, 2.0, 3.0, 4.0]])
    assert F.value(states)[0] == pytest.approx((1 + 4 + 9 + 16) / 4)


def test_one_particle_sigma_linear(gaussian_model, f_linear):
    assert one_particle_sigma_quadrature(gaussian_model, f_linear) == pytest.approx(1.0, abs=1e-4)


def test_one_particle_sigma_quadratic(gaussian_model, f_quadratic):
    assert one_particle_sigma_quadrature(gaussian_model, f_quadratic) == pytest.approx(1.0, abs=1e-4)


def test_one_particle_sigma_constant(gaussian_model):
    const = Observable(
        lambda x: np.full_like(np.asarray(x, dtype=float), 7.0),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        7.0,
    )
    assert one_particle_sigma_quadrature(gaussian_model, const) == pytest.approx(0.0, abs=1e-12)


def test_ou_long_run_asym_var(ou_long_run):
    # 2 sigma_f^2 = 2 <f, phi> = 2 for the unit Gaussian with f = x
    rep = batch_means_variance(ou_long_run, 1e-2, 200)
    assert abs(rep.asym_var - 2.0) / 2.0 < 0.15


def test_ci_halves_when_T_doubles(ou_long_run):
    # Same series, first half vs whole: the mean-CI must drop by roughly
    # the CLT factor; "halves within 0.3" brackets 1/sqrt(2).
    half = batch_means_variance(ou_long_run[: ou_long_run.size // 2], 1e-2, 50)
    full = batch_means_variance(ou_long_run, 1e-2, 50)
    ratio = full.ci_halfwidth / half.ci_halfwidth
    assert abs(ratio - 0.5) <= 0.3


def test_beta_zero_sweep_equals_independent(gaussian_model, f_linear):
    rows, sweep = replicate_sweep(
        gaussian_model, f_linear, ["mirror", "independent"], [0.0], 4, 0.02, 1000.0,
        100.0, seed=8, n_batches=20,
    )
    mirror_zero = [r for r in rows if r.kind == "mirror"][0]
    independent = [r for r in rows if r.kind == "independent"][0]
    assert mirror_zero.report.asym_var == independent.report.asym_var


def test_pooled_report_shapes():
    rng = np.random.default_rng(0)
    bm = rng.standard_normal((10, 40)) * 0.1
    rep = pooled_variance_report(bm, 2.0)
    assert rep.replicate_count == 10
    assert rep.n_batches == 40
    assert rep.asym_var >= 0
