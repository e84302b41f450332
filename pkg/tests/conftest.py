import numpy as np
import pytest

from coupledmc.models import (
    build_gaussian_model,
    linear_observable,
    mixed_observable,
    quadratic_observable,
)
from coupledmc.poisson import solve_poisson_overdamped_1d


@pytest.fixture(scope="session")
def gaussian_model():
    return build_gaussian_model(1.0, 8.0, 2001)


@pytest.fixture(scope="session")
def gaussian_model_fine():
    return build_gaussian_model(1.0, 8.0, 4001)


@pytest.fixture(scope="session")
def f_linear(gaussian_model):
    return linear_observable(gaussian_model)


@pytest.fixture(scope="session")
def f_quadratic(gaussian_model):
    return quadratic_observable(gaussian_model)


@pytest.fixture(scope="session")
def f_mixed(gaussian_model):
    return mixed_observable(gaussian_model)


@pytest.fixture(scope="session")
def ps_linear(gaussian_model, f_linear):
    return solve_poisson_overdamped_1d(gaussian_model, f_linear)


@pytest.fixture(scope="session")
def ps_quadratic(gaussian_model, f_quadratic):
    return solve_poisson_overdamped_1d(gaussian_model, f_quadratic)


@pytest.fixture(scope="session")
def ps_mixed(gaussian_model, f_mixed):
    return solve_poisson_overdamped_1d(gaussian_model, f_mixed)


@pytest.fixture(scope="session")
def ou_long_run(gaussian_model, f_linear):
    """Single-particle run at dt=1e-2, T=1e5: shared by the estimator unit
    tests and the acceptance suite (criterion 2)."""
    from coupledmc.langevin import LangevinConfig, run_langevin

    cfg = LangevinConfig(
        model=gaussian_model,
        n_particles=1,
        coupling=None,
        dt=1e-2,
        t_total=1e5,
        burn_in=1e3,
        seed=2024,
    )
    _, fseries = run_langevin(cfg, f_linear)
    return fseries
