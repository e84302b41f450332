"""Ergodic averages, asymptotic-variance estimates and diagnostics.

Convention: every reported "asymptotic variance" estimates 2 sigma_F^2,
the variance constant of the central limit theorem for the time average
sqrt(T) * (mean_T F - pi(f)).  Batch means over B contiguous blocks of
length T_b estimate it as T_b * Var(block means); confidence intervals
come from a Student-t over the blocks (single run) or over replicate
estimates (sweeps).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .coupling import ScalarCoupling1D
from .langevin import PairSweepStats, run_scalar_pair_sweep
from .models import Observable, TargetModel1D
from .poisson import PoissonSolution, solve_poisson_overdamped_1d

__all__ = [
    "ExtendedObservable",
    "VarianceReport",
    "SweepRow",
    "batch_means_variance",
    "pooled_variance_report",
    "replicate_sweep",
    "one_particle_sigma_quadrature",
]


@dataclass(frozen=True)
class ExtendedObservable:
    """F(x_1, ..., x_n) = mean_i f(x_i)."""

    base: Observable
    n: int

    def value(self, states: np.ndarray) -> np.ndarray:
        """states has particle index on the last axis (1D particles)."""
        return np.mean(self.base.value(np.asarray(states, dtype=float)), axis=-1)


@dataclass(frozen=True)
class VarianceReport:
    """Batch-means summary; ``asym_var`` estimates 2 sigma_F^2."""

    mean: float
    asym_var: float
    ci_halfwidth: float
    n_batches: int
    replicate_count: int = 1


@dataclass(frozen=True)
class SweepRow:
    beta: float
    kind: str
    report: VarianceReport


def batch_means_variance(series: np.ndarray, dt: float, n_batches: int) -> VarianceReport:
    """Estimate the CLT variance 2 sigma_F^2 of a time-average estimator.

    ``series`` holds F sampled every ``dt`` time units.  The series is cut
    into ``n_batches`` contiguous batches (tail remainder dropped); the
    estimate is T_batch times the sample variance of the batch means, and
    the CI half-width (for the mean) uses a Student-t with B - 1 degrees
    of freedom.
    """
    series = np.asarray(series, dtype=float)
    if n_batches < 2:
        raise ValueError("need at least 2 batches")
    if series.size < 10 * n_batches:
        raise ValueError(
            f"series too short: {series.size} samples for {n_batches} batches "
            f"(need at least {10 * n_batches})"
        )
    batch_len = series.size // n_batches
    used = batch_len * n_batches
    means = series[:used].reshape(n_batches, batch_len).mean(axis=1)
    t_batch = batch_len * dt
    var_means = float(np.var(means, ddof=1))
    asym_var = t_batch * var_means
    tq = stats.t.ppf(0.975, n_batches - 1)
    ci = tq * np.sqrt(var_means / n_batches)
    return VarianceReport(
        mean=float(means.mean()),
        asym_var=asym_var,
        ci_halfwidth=float(ci),
        n_batches=n_batches,
    )


def pooled_variance_report(batch_means: np.ndarray, t_batch: float) -> VarianceReport:
    """Pool per-replicate batch-means estimates of 2 sigma_F^2.

    ``batch_means`` is (replicates, batches).  The pooled point estimate is
    the mean of the per-replicate estimates; the CI half-width (for the
    pooled 2 sigma_F^2) is a Student-t over replicates.
    """
    batch_means = np.atleast_2d(np.asarray(batch_means, dtype=float))
    n_rep, n_batches = batch_means.shape
    per_rep = t_batch * np.var(batch_means, axis=1, ddof=1)
    estimate = float(per_rep.mean())
    if n_rep > 1:
        tq = stats.t.ppf(0.975, n_rep - 1)
        ci = float(tq * per_rep.std(ddof=1) / np.sqrt(n_rep))
    else:
        # Fall back to the chi-square spread of a single batch-means estimate.
        ci = float(estimate * np.sqrt(2.0 / (n_batches - 1)) * 1.96)
    return VarianceReport(
        mean=float(batch_means.mean()),
        asym_var=estimate,
        ci_halfwidth=ci,
        n_batches=n_batches,
        replicate_count=n_rep,
    )


def mean_ci(values: np.ndarray) -> tuple[float, float]:
    """Mean and Student-t 95% half-width of a small sample."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        return float(values.mean()), float("inf")
    tq = stats.t.ppf(0.975, n - 1)
    return float(values.mean()), float(tq * values.std(ddof=1) / np.sqrt(n))


def replicate_sweep(
    model: TargetModel1D,
    observable: Observable,
    kinds: Sequence[str],
    beta_grid: Sequence[float],
    n_replicates: int,
    dt: float,
    t_total: float,
    burn_in: float,
    seed: int,
    n_batches: int = 50,
    poisson: Optional[PoissonSolution] = None,
) -> tuple[list[SweepRow], PairSweepStats]:
    """Variance-vs-strength sweep over coupling kinds, n = 2 particles.

    All (kind, beta) variants run on common random numbers; each cell pools
    ``n_replicates`` batch-means estimates.  Returns the table of rows plus
    the raw sweep statistics (variant order: kinds outer, betas inner).
    """
    if poisson is None and "poisson" in kinds:
        poisson = solve_poisson_overdamped_1d(model, observable)
    couplings = [
        ScalarCoupling1D(
            kind=k, strength_beta=b, poisson=poisson if k == "poisson" else None,
            observable=observable if k == "observable_grad" else None,
        )
        for k in kinds
        for b in beta_grid
    ]
    sweep = run_scalar_pair_sweep(
        model, couplings, observable, n_replicates, dt, t_total, burn_in, seed, n_batches
    )
    record = int(round((t_total - burn_in) / dt))
    t_batch = (record // n_batches) * dt
    rows = []
    for i, (k, b) in enumerate([(k, b) for k in kinds for b in beta_grid]):
        rows.append(SweepRow(beta=float(b), kind=k, report=pooled_variance_report(sweep.batch_means[i], t_batch)))
    return rows, sweep


def one_particle_sigma_quadrature(model: TargetModel1D, obs: Observable) -> float:
    """sigma_f^2 = <f - pi(f), phi> under pi, by quadrature."""
    ps = solve_poisson_overdamped_1d(model, obs)
    f0 = obs.value(model.grid) - model.expectation(np.asarray(obs.value(model.grid), dtype=float))
    return model.expectation(f0 * ps.phi)
