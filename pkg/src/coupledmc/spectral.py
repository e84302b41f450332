"""Finite-difference spectral analysis of the 1D overdamped generator.

The generator -L = V' d/dx - d^2/dx^2 is self-adjoint in L^2(pi).  On a
uniform grid with node masses w_i ~ exp(-V(x_i)) the flux-form
discretisation, symmetrised by the similarity transform D = diag(sqrt(w)),
is tridiagonal with

    off-diagonal  -1/h^2
    diagonal      ( sqrt(w_{i+1}/w_i) + sqrt(w_{i-1}/w_i) ) / h^2

and Dirichlet truncation at the domain edges.  Its spectrum approximates
0 = mu_0 < mu_1 <= mu_2 <= ... of -L; the quasi-zero mode (the constant
function) is detected and dropped, leaving the spectrum on centred
observables.

For an even potential every eigenfunction is even or odd.  A mirror-coupled
pair started on the antidiagonal only ever sees the pair-averaged
observable, which annihilates odd functions; the decay rate that survives
this quotient is therefore the smallest eigenvalue whose eigenfunction is
even.  (A coupled run can also decay at the one-particle rate with a larger
constant prefactor when the coupled and product invariant measures have
bounded density ratios; that regime is a documentation note, not a
computation.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError
from .models import TargetModel1D

__all__ = [
    "SpectralReport",
    "DecayRateFit",
    "discretize_generator",
    "compute_spectrum",
    "coupled_rate_mirror",
    "autocovariance",
    "empirical_decay_rate",
]


@dataclass(frozen=True)
class SpectralReport:
    """Low modes of -L on centred observables, with parity labels."""

    eigenvalues: np.ndarray
    parities: tuple[str, ...]
    one_particle_rate: float
    mirror_coupled_rate: Optional[float] = None
    eigenfunctions: Optional[np.ndarray] = None
    grid: Optional[np.ndarray] = None


def _bands(model: TargetModel1D, grid_size: int):
    grid = np.linspace(model.domain[0], model.domain[1], grid_size)
    h = grid[1] - grid[0]
    pot = np.asarray(model.potential(grid), dtype=float)
    pot = pot - pot.min()
    inner = slice(1, -1)
    ratio_up = np.exp(0.5 * (pot[1:-1] - pot[2:]))
    ratio_dn = np.exp(0.5 * (pot[1:-1] - pot[:-2]))
    diag = (ratio_up + ratio_dn) / (h * h)
    off = -np.ones(grid_size - 3) / (h * h)
    return grid[inner], pot[inner], diag, off


def discretize_generator(model: TargetModel1D, grid_size: int) -> np.ndarray:
    """Dense symmetric discretisation of -L on the interior nodes."""
    _, _, diag, off = _bands(model, grid_size)
    mat = np.diag(diag)
    idx = np.arange(diag.size - 1)
    mat[idx, idx + 1] = off
    mat[idx + 1, idx] = off
    return mat


def compute_spectrum(model: TargetModel1D, grid_size: int = 2001, n_modes: int = 6) -> SpectralReport:
    """Lowest modes of -L on centred observables.

    Eigenfunctions are returned in the original (unweighted) variables on
    the interior grid; parity labels are "even", "odd" or "none" by overlap
    of at least 0.99 with the symmetrised or antisymmetrised eigenfunction.
    """
    grid, pot, diag, off = _bands(model, grid_size)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_modes))

    # Identify the quasi-zero mode (the constant function in the weighted
    # variables) and drop it.
    sqrt_w = np.exp(-0.5 * pot)
    sqrt_w = sqrt_w / np.linalg.norm(sqrt_w)
    overlaps = np.abs(vecs.T @ sqrt_w)
    zero_idx = int(np.argmax(overlaps))
    keep = [k for k in range(vals.size) if k != zero_idx]
    vals = vals[keep]
    vecs = vecs[:, keep]

    parities = []
    for k in range(vals.size):
        psi = vecs[:, k]
        even = 0.5 * (psi + psi[::-1])
        odd = 0.5 * (psi - psi[::-1])
        ne, no = np.linalg.norm(even), np.linalg.norm(odd)
        if ne >= 0.99:
            parities.append("even")
        elif no >= 0.99:
            parities.append("odd")
        else:
            parities.append("none")

    # Back to observable space: e = psi / sqrt(w), normalised in L2(pi).
    funcs = vecs / np.exp(-0.5 * pot)[:, None]
    return SpectralReport(
        eigenvalues=vals,
        parities=tuple(parities),
        one_particle_rate=float(vals[0]),
        eigenfunctions=funcs,
        grid=grid,
    )


def coupled_rate_mirror(report: SpectralReport) -> float:
    """Decay rate of the mirror-coupled pair semigroup on pair averages.

    Odd eigenfunctions are annihilated by the pair average on the
    antidiagonal, so the surviving rate is the smallest eigenvalue with an
    even eigenfunction.  Requires an even potential: parity classification
    must have succeeded for the lowest five modes.
    """
    scope = min(5, len(report.parities))
    if any(p == "none" for p in report.parities[:scope]):
        raise ConfigurationError("potential not even or grid asymmetric")
    for mu, parity in zip(report.eigenvalues, report.parities):
        if parity == "even":
            return float(mu)
    raise ConfigurationError("no even mode among the computed eigenvalues")


def with_mirror_rate(report: SpectralReport) -> SpectralReport:
    """Report with the mirror-coupled rate filled in."""
    return replace(report, mirror_coupled_rate=coupled_rate_mirror(report))


def autocovariance(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Empirical autocovariance at lags 0..max_lag (biased normalisation)."""
    series = np.asarray(series, dtype=float)
    n = series.size
    if n < 2:
        raise ValueError("series too short for autocovariance")
    x = series - series.mean()
    acov = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        acov[k] = np.dot(x[: n - k], x[k:]) / n
    return acov


@dataclass(frozen=True)
class DecayRateFit:
    """Log-autocovariance slope fit; ``flag`` is ok / inconclusive /
    degenerate."""

    rate: float
    ci_halfwidth: float
    n_lags: int
    flag: str


def empirical_decay_rate(
    acov: np.ndarray, dt: float, min_lags: int = 4, floor_ratio: float = 0.03
) -> DecayRateFit:
    """Fit -slope of log autocovariance over the positive-decay window.

    The window runs from lag 1 until the autocovariance drops below
    ``floor_ratio`` of its lag-0 value or turns nonpositive.  Series with
    no usable window come back flagged inconclusive; zero-variance series
    come back flagged degenerate.
    """
    acov = np.asarray(acov, dtype=float)
    if acov[0] <= 1e-14:
        return DecayRateFit(rate=math.nan, ci_halfwidth=math.inf, n_lags=0, flag="degenerate")
    rho = acov / acov[0]
    window = []
    for k in range(1, rho.size):
        if rho[k] <= floor_ratio:
            break
        window.append(k)
    if len(window) < min_lags:
        return DecayRateFit(rate=math.nan, ci_halfwidth=math.inf, n_lags=len(window), flag="inconclusive")
    lags = np.array(window, dtype=float)
    logs = np.log(rho[window])
    times = lags * dt
    design = np.stack([times, np.ones_like(times)], axis=1)
    coef, residuals, *_ = np.linalg.lstsq(design, logs, rcond=None)
    rate = -float(coef[0])
    dof = len(window) - 2
    if dof > 0 and residuals.size:
        s2 = float(residuals[0]) / dof
        sx = float(np.sum((times - times.mean()) ** 2))
        ci = 1.96 * math.sqrt(s2 / sx)
    else:
        ci = math.inf
    return DecayRateFit(rate=rate, ci_halfwidth=ci, n_lags=len(window), flag="ok")
