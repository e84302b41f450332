import math

import numpy as np
import pytest

from coupledmc.coupling import MatrixCouplingND, ScalarCoupling1D, WeightScheme
from coupledmc.errors import ConfigurationError, DivergenceError
from coupledmc.langevin import (
    LangevinConfig,
    run_block_sweep,
    run_langevin,
    run_scalar_pair_sweep,
    step_overdamped,
    step_underdamped,
)
from coupledmc.models import (
    TargetModel1D,
    build_gaussian_model_nd,
    norm_sq_observable,
)

QUARTER = math.pi / 4


def _flat_model():
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return TargetModel1D(zero, zero, (-1.0, 1.0), 11)


def test_step_overdamped_no_drift_no_noise():
    state = np.array([[0.4], [-0.2]])
    out = step_overdamped(state, 0.01, _flat_model(), None, np.zeros((2, 1)))
    assert np.array_equal(out, state)


def test_step_underdamped_trivial():
    q = np.array([[0.4]])
    p = np.zeros((1, 1))
    qn, pn = step_underdamped(q, p, 0.01, _flat_model(), 1.0, 1.0, None, np.zeros((1, 1)))
    assert np.array_equal(qn, q)
    assert np.array_equal(pn, p)


def test_synchronous_equal_start_stays_equal(gaussian_model, f_linear):
    cfg = LangevinConfig(
        model=gaussian_model,
        n_particles=2,
        coupling=ScalarCoupling1D("synchronous", QUARTER),
        dt=0.01,
        t_total=30.0,
        burn_in=0.0,
        seed=9,
        x0=np.array([[0.7], [0.7]]),
        thin_stride=1,
    )
    traj, _ = run_langevin(cfg, f_linear)
    assert np.all(traj.positions[:, 0, 0] == traj.positions[:, 1, 0])


def test_mirror_antithetic_start_stays_antithetic(gaussian_model, f_linear):
    cfg = LangevinConfig(
        model=gaussian_model,
        n_particles=2,
        coupling=ScalarCoupling1D("mirror", QUARTER),
        dt=0.01,
        t_total=30.0,
        burn_in=0.0,
        seed=9,
        x0=np.array([[1.1], [-1.1]]),
        thin_stride=1,
    )
    traj, fseries = run_langevin(cfg, f_linear)
    assert np.all(traj.positions[:, 0, 0] == -traj.positions[:, 1, 0])
    assert np.all(fseries == 0.0)


def test_seed_determinism(gaussian_model, f_linear):
    cfg = dict(
        model=gaussian_model,
        n_particles=2,
        coupling=ScalarCoupling1D("symmetric", 0.3),
        dt=0.01,
        t_total=20.0,
        burn_in=1.0,
        seed=123,
    )
    _, f1 = run_langevin(LangevinConfig(**cfg), f_linear)
    _, f2 = run_langevin(LangevinConfig(**cfg), f_linear)
    assert np.array_equal(f1, f2)


def test_underdamped_gaussian_variance(gaussian_model, f_linear):
    # invariant measure has Var(q) = 1
    cfg = LangevinConfig(
        model=gaussian_model,
        n_particles=1,
        coupling=None,
        dt=1e-3,
        t_total=2e4,
        burn_in=1e3,
        seed=31,
        dynamics="underdamped",
        gamma=1.0,
        mass=1.0,
    )
    _, fseries = run_langevin(cfg, f_linear)
    var = float(np.var(fseries))
    # CI from batch means of the squared series
    from coupledmc.estimators import batch_means_variance

    rep = batch_means_variance((fseries - fseries.mean()) ** 2, 1e-3, 50)
    halfwidth = rep.ci_halfwidth
    assert abs(var - 1.0) <= 3 * max(halfwidth, 0.01)


def test_marginal_law_matches_single_particle(gaussian_model, f_linear):
    # two-particle independent run vs single-particle run: same-CI statistics
    couplings = [ScalarCoupling1D("independent", 0.0)]
    sweep = run_scalar_pair_sweep(
        gaussian_model, couplings, f_linear, 8, 0.02, 4000.0, 400.0, seed=17
    )
    mean_pair = sweep.mean_f_particle[0, :, 0]
    cfg = LangevinConfig(
        model=gaussian_model, n_particles=1, coupling=None, dt=0.02,
        t_total=4000.0, burn_in=400.0, seed=18,
    )
    _, fs = run_langevin(cfg, f_linear)
    from coupledmc.estimators import mean_ci

    mu_pair, ci_pair = mean_ci(mean_pair)
    assert abs(mu_pair - fs.mean()) < ci_pair + 0.1


def test_divergence_guard():
    # explosive potential: gradient pushing outward ensures blow-up
    def outward(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.clip(-200.0 * x**3, -1e300, 1e300)

    blow = TargetModel1D(
        lambda x: -np.asarray(x, dtype=float) ** 2,
        outward,
        (-8.0, 8.0),
        101,
    )
    from coupledmc.models import Observable

    obs = Observable(lambda x: np.asarray(x, dtype=float), lambda x: np.ones_like(np.asarray(x, dtype=float)), 0.0)
    cfg = LangevinConfig(
        model=blow, n_particles=1, coupling=None, dt=0.1, t_total=100.0, burn_in=0.0,
        seed=2, x0=np.array([[2.0]]),
    )
    with pytest.raises(DivergenceError):
        run_langevin(cfg, obs)


def test_config_validation(gaussian_model):
    with pytest.raises(ConfigurationError):
        LangevinConfig(model=gaussian_model, n_particles=2, coupling=None, dt=0.2,
                       t_total=10.0, burn_in=0.0, seed=1)
    with pytest.raises(ConfigurationError):
        LangevinConfig(model=gaussian_model, n_particles=2, coupling=None, dt=0.01,
                       t_total=10.0, burn_in=10.0, seed=1)
    with pytest.raises(ConfigurationError):
        LangevinConfig(model=gaussian_model, n_particles=4,
                       coupling=ScalarCoupling1D("mirror", 0.1), dt=0.01,
                       t_total=10.0, burn_in=0.0, seed=1)


def test_block_sweep_runs_and_keeps_marginals():
    model = build_gaussian_model_nd(3)
    obs = norm_sq_observable(model, scale=0.5)
    beta = QUARTER
    grad_phi = lambda pts: 0.5 * np.asarray(pts, dtype=float)
    src = MatrixCouplingND("reflection_poisson", beta, 3, grad_phi=grad_phi)
    variants = [
        (WeightScheme("pairwise_sorted", beta, 4), src),
        (WeightScheme("pairwise_fixed", 0.0, 4), MatrixCouplingND("independent", 0.0, 3)),
    ]
    sweep = run_block_sweep(model, variants, obs, 4, 0.02, 500.0, 50.0, seed=3)
    # marginal mean of f per particle must match E f = 1.5 for every variant
    for v in range(2):
        assert abs(sweep.mean_f_particle[v].mean() - 1.5) < 0.1


def test_pair_sweep_common_random_numbers(gaussian_model, f_linear):
    # beta = 0 variants of different kinds are the same dynamics: with CRN
    # they produce identical batch means.
    couplings = [ScalarCoupling1D("mirror", 0.0), ScalarCoupling1D("symmetric", 0.0)]
    sweep = run_scalar_pair_sweep(gaussian_model, couplings, f_linear, 3, 0.02, 500.0, 50.0, seed=4)
    assert np.array_equal(sweep.batch_means[0], sweep.batch_means[1])
