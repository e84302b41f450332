"""Coupled zigzag pairs: double flips as the coupling mechanism.

Encouraging simultaneous velocity flips when the particles move in
opposite directions keeps them anti-aligned: the variance of the pair
average falls, the fraction of time spent in opposite directions and the
mean separation grow, while each marginal stays exactly on target.
"""

import numpy as np

from coupledmc import RateSpec, build_gaussian_model, linear_observable
from coupledmc.coupling import ZigzagCoupling
from coupledmc.estimators import pooled_variance_report
from coupledmc.zigzag import run_zigzag_sweep

model = build_gaussian_model(1.0, 8.0, 2001)
obs = linear_observable(model)
rates = RateSpec(grad_potential=model.grad_potential, excess=0.1, lipschitz=1.0)

betas = [0.0, 0.5, 1.0]
sweep, _ = run_zigzag_sweep(
    model, rates, [ZigzagCoupling("mirror_flip", b) for b in betas],
    obs, n_replicates=8, t_total=10000.0, burn_in=1000.0, seed=5,
)

print("beta   2sigma_F^2      opposite-time  mean|x-y|  Var(x)")
for v, b in enumerate(betas):
    rep = pooled_variance_report(sweep.batch_means[v], sweep.t_batch)
    print(f"{b:4.2f}   {rep.asym_var:5.3f}+-{rep.ci_halfwidth:.3f}   "
          f"{sweep.opposite_fraction[v].mean():12.3f}   "
          f"{sweep.mean_abs_distance[v].mean():8.3f}   {sweep.var_x[v].mean():5.3f}")
print("\n(mean |x-y| for independent zigzag pairs is 2/sqrt(pi) =",
      round(2 / np.sqrt(np.pi), 3), "on this target)")
