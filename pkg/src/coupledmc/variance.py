"""Deterministic evaluation of the linearised variance objective.

For a pair of 1D diffusions the first-order change of the asymptotic
variance per unit coupling strength is

    delta_sigma^2(alpha) = E_{pi x pi}[ alpha(x, y) phi'(x) phi'(y) ],

with phi the one-particle Poisson solution for the observable.  The
analogous objective for coupled zigzag pairs is

    (1/4) E_{pi x pi}[ alpha_tilde(x, y) phi'(x) phi'(y) ],

where alpha_tilde aggregates the four velocity sectors of the double-flip
rate with signs (+ + - -).  Both are evaluated by tensor-grid trapezoid
quadrature normalised to be expectations under pi x pi, with an optional
exact-sampling Monte Carlo cross-check (inverse CDF on the grid, so the
check carries no sampler bias).

The empirical counterpart ties the quadrature to simulation: central
differences of batch-means variance estimates at coupling strengths +-eps
under common random numbers estimate the same derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coupling import ScalarCoupling1D, ZigzagCoupling
from .errors import ConfigurationError
from .langevin import run_scalar_pair_sweep
from .models import Observable, TargetModel1D
from .poisson import PoissonSolution, solve_poisson_overdamped_1d
from .zigzag import RateSpec

__all__ = [
    "DeltaSigmaReport",
    "DerivativeCheck",
    "OptimalityError",
    "delta_sigma_overdamped_1d",
    "delta_sigma_zigzag",
    "optimality_scan",
    "finite_difference_derivative_check",
    "sample_target_inverse_cdf",
]

_ROW_CHUNK = 256


@dataclass(frozen=True)
class DeltaSigmaReport:
    """Quadrature value of the linearised objective, with an optional
    Monte Carlo cross-check."""

    value: float
    quadrature_grid: int
    mc_value: Optional[float] = None
    mc_ci: Optional[float] = None


class OptimalityError(AssertionError):
    """The expected optimal coupling did not attain the scanned minimum."""


def sample_target_inverse_cdf(
    model: TargetModel1D, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw from the grid-discretised target by inverting its CDF."""
    w = model.density_weights
    cdf = np.cumsum(w)
    cdf = cdf / cdf[-1]
    return np.interp(rng.random(n), cdf, model.grid)


def _tensor_quadrature(model, dphi, alpha_of_rows) -> float:
    """sum_ij w_i w_j alpha(x_i, x_j) dphi_i dphi_j, chunked by rows."""
    grid = model.grid
    w = model.density_weights
    wd = w * dphi
    total = 0.0
    for lo in range(0, grid.size, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, grid.size)
        a = alpha_of_rows(grid[lo:hi, None], grid[None, :], lo, hi)
        total += float(wd[lo:hi] @ (a @ wd))
    return total


def delta_sigma_overdamped_1d(
    model: TargetModel1D,
    poisson: PoissonSolution,
    coupling: ScalarCoupling1D,
    mc_samples: int = 0,
    seed: int = 0,
) -> DeltaSigmaReport:
    """Linearised variance change for a scalar pair coupling.

    With ``mc_samples`` > 0 the value is cross-checked by exact sampling of
    the product target.
    """
    dphi = np.asarray(poisson.dphi, dtype=float)

    def alpha_rows(xs, ys, lo, hi):
        return alpha_grid(coupling, xs, ys)

    value = _tensor_quadrature(model, dphi, alpha_rows)

    mc_value = mc_ci = None
    if mc_samples > 0:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xD5,))))
        xs = sample_target_inverse_cdf(model, mc_samples, rng)
        ys = sample_target_inverse_cdf(model, mc_samples, rng)
        vals = alpha_grid(coupling, xs, ys) * poisson.dphi_at(xs) * poisson.dphi_at(ys)
        mc_value = float(vals.mean())
        mc_ci = float(1.96 * vals.std(ddof=1) / math.sqrt(mc_samples))
    return DeltaSigmaReport(
        value=value, quadrature_grid=model.grid_size, mc_value=mc_value, mc_ci=mc_ci
    )


def alpha_grid(coupling: ScalarCoupling1D, xs, ys) -> np.ndarray:
    """Vectorised alpha(x, y) on broadcastable position arrays."""
    strength = coupling.orientation * math.sin(2.0 * coupling.strength_beta)
    return strength * coupling.sign_pattern(xs, ys)


def delta_sigma_zigzag(
    model: TargetModel1D,
    poisson_tilde: PoissonSolution,
    coupling: ZigzagCoupling,
    rates: RateSpec,
) -> DeltaSigmaReport:
    """Linearised variance change for a coupled zigzag pair.

    The four velocity sectors of the double-flip rate are aggregated at
    every grid pair: alpha_tilde = a(+,+) + a(-,-) - a(+,-) - a(-,+).
    """
    dphi = np.asarray(poisson_tilde.dphi, dtype=float)
    grid = model.grid
    lam_plus = np.asarray(rates.switching_rate(grid, 1.0), dtype=float)
    lam_minus = np.asarray(rates.switching_rate(grid, -1.0), dtype=float)
    lam = {1: lam_plus, -1: lam_minus}

    def alpha_rows(xs, ys, lo, hi):
        out = np.zeros((xs.shape[0], ys.shape[1]))
        for tx, ty, sgn in ((1, 1, 1.0), (-1, -1, 1.0), (1, -1, -1.0), (-1, 1, -1.0)):
            cap = np.minimum(lam[tx][lo:hi, None], lam[ty][None, :])
            cond = coupling.condition(xs, ys, float(tx), float(ty))
            out += sgn * np.where(cond, coupling.strength_beta * cap, 0.0)
        return 0.25 * out

    value = _tensor_quadrature(model, dphi, alpha_rows)
    return DeltaSigmaReport(value=value, quadrature_grid=model.grid_size)


# Couplings whose sign pattern matches each observable symmetry class; a
# scan asserts that the pattern-matched kinds tie with the poisson optimum.
_SCAN_TOL = 1e-6


def optimality_scan(
    model: TargetModel1D,
    poisson: PoissonSolution,
    family: Sequence[str],
    observable: Observable,
    expected_optimal: Sequence[str] = ("poisson",),
    tol: float = 1e-6,
) -> list[tuple[str, float]]:
    """Evaluate delta sigma^2 per kind at full strength and rank ascending.

    Raises OptimalityError (with the per-kind values) unless every kind in
    ``expected_optimal`` attains the scanned minimum within ``tol``.
    """
    values = {}
    for kind in family:
        coup = ScalarCoupling1D(
            kind=kind,
            strength_beta=math.pi / 4,
            poisson=poisson if kind == "poisson" else None,
            observable=observable if kind == "observable_grad" else None,
        )
        values[kind] = delta_sigma_overdamped_1d(model, poisson, coup).value
    ranking = sorted(values.items(), key=lambda kv: kv[1])
    best = ranking[0][1]
    for kind in expected_optimal:
        if kind in values and values[kind] > best + tol:
            raise OptimalityError(
                f"expected {kind} to attain the minimum; scan gave {ranking}"
            )
    return ranking


@dataclass(frozen=True)
class DerivativeCheck:
    """Empirical vs quadrature derivative of the variance in coupling strength."""

    slope: float
    slope_ci: float
    quadrature: float
    rel_discrepancy: float
    inconclusive: bool


def finite_difference_derivative_check(
    model: TargetModel1D,
    observable: Observable,
    kind: str,
    eps: float = 0.2,
    n_replicates: int = 20,
    dt: float = 0.02,
    t_total: float = 20000.0,
    burn_in: float = 2000.0,
    seed: int = 20,
    n_batches: int = 50,
    poisson: Optional[PoissonSolution] = None,
) -> DerivativeCheck:
    """Central-difference slope of the reported variance at zero coupling.

    Runs the +-eps couplings on common random numbers, forms per-replicate
    slopes of the batch-means 2 sigma_F^2 estimates, and compares them with
    the quadrature value of delta sigma^2 itself: for a pair, the coupling
    operator applied to the product of the two Poisson solutions carries a
    factor 1/2 (d sigma_F^2/d eps = delta sigma^2 / 2), which exactly
    cancels the factor 2 of the reported-2-sigma_F^2 convention.  (For the
    mirror-coupled Gaussian pair with f = x this is exact at all strengths:
    2 sigma_F^2(eps) = 1 - eps.)  When the slope CI straddles zero and the
    quadrature signal is weak the check reports inconclusive instead of a
    sign verdict.
    """
    if not (0 < eps <= 1):
        raise ConfigurationError("eps must lie in (0, 1]")
    if poisson is None:
        poisson = solve_poisson_overdamped_1d(model, observable)
    beta = 0.5 * math.asin(eps)
    plus = ScalarCoupling1D(
        kind=kind, strength_beta=beta,
        poisson=poisson if kind == "poisson" else None,
        observable=observable if kind == "observable_grad" else None,
    )
    minus = ScalarCoupling1D(
        kind=kind, strength_beta=beta, orientation=-1,
        poisson=poisson if kind == "poisson" else None,
        observable=observable if kind == "observable_grad" else None,
    )
    sweep = run_scalar_pair_sweep(
        model, [plus, minus], observable, n_replicates, dt, t_total, burn_in, seed, n_batches
    )
    record = int(round((t_total - burn_in) / dt))
    t_batch = (record // n_batches) * dt
    per_rep = t_batch * np.var(sweep.batch_means, axis=2, ddof=1)
    slopes = (per_rep[0] - per_rep[1]) / (2.0 * eps)
    slope = float(slopes.mean())
    from scipy import stats

    ci = float(stats.t.ppf(0.975, n_replicates - 1) * slopes.std(ddof=1) / math.sqrt(n_replicates))

    unit = ScalarCoupling1D(
        kind=kind, strength_beta=math.pi / 4,
        poisson=poisson if kind == "poisson" else None,
        observable=observable if kind == "observable_grad" else None,
    )
    quad = delta_sigma_overdamped_1d(model, poisson, unit).value
    scale = max(abs(quad), abs(slope), 1e-12)
    inconclusive = (abs(slope) <= ci) and abs(quad) < 0.1
    return DerivativeCheck(
        slope=slope,
        slope_ci=ci,
        quadrature=quad,
        rel_discrepancy=abs(slope - quad) / scale,
        inconclusive=inconclusive,
    )
