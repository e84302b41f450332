"""coupledmc: coupled MCMC samplers and variance-optimal couplings.

Simulation of correlated Langevin diffusions and coupled zigzag processes,
quadrature solutions of the 1D Poisson equations behind them, the
linearised variance objective that selects couplings, entropic transport
lower bounds for comparison, and spectral convergence-rate checks.
"""

__version__ = "0.1.0"

from .models import (  # noqa: F401
    Observable,
    TargetModel1D,
    TargetModelND,
    build_cauchy_model,
    build_double_well_model,
    build_gaussian_model,
    build_gaussian_model_nd,
    linear_observable,
    mixed_observable,
    norm_sq_observable,
    norm_sq_plus_linear_observable,
    quadratic_observable,
    quadrature_expectation,
)
from .poisson import (  # noqa: F401
    PoissonSolution,
    SignTable,
    sign_structure,
    solve_poisson_overdamped_1d,
    solve_poisson_zigzag_1d,
)
from .coupling import (  # noqa: F401
    MatrixCouplingND,
    ScalarCoupling1D,
    WeightScheme,
    ZigzagCoupling,
    alpha_1d,
    assemble_block_G,
    mixing_matrix_1d,
    reflection_matrix,
    zigzag_alpha,
)
from .langevin import (  # noqa: F401
    LangevinConfig,
    TrajectorySample,
    run_langevin,
    step_overdamped,
    step_underdamped,
)
from .zigzag import (  # noqa: F401
    RateSpec,
    ZigzagState,
    coupled_event_rates,
    simulate_coupled_zigzag,
)
from .estimators import (  # noqa: F401
    ExtendedObservable,
    VarianceReport,
    batch_means_variance,
    one_particle_sigma_quadrature,
    replicate_sweep,
)
from .variance import (  # noqa: F401
    DeltaSigmaReport,
    delta_sigma_overdamped_1d,
    delta_sigma_zigzag,
    finite_difference_derivative_check,
    optimality_scan,
)
from .ot import (  # noqa: F401
    DiscreteMarginal,
    TransportPlan,
    assemble_cost,
    marginal_from_model,
    plan_cost_of_empirical,
    sinkhorn,
    sinkhorn_ladder,
)
from .spectral import (  # noqa: F401
    SpectralReport,
    compute_spectrum,
    coupled_rate_mirror,
    discretize_generator,
    empirical_decay_rate,
)
