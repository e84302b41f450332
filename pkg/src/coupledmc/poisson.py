"""Quadrature solutions of the 1D Poisson equations -(-V'phi' + phi'') = f0.

Variation of constants gives

    phi'(x) = -exp(V(x)) * int_a^x f0(s) exp(-V(s)) ds,

with the constant of integration fixed to zero: any other choice makes phi
grow like int exp(V), which is not integrable against exp(-V) for a
normalisable target.  The cumulative integral is evaluated with the same
trapezoid rule as the model expectations, so it vanishes exactly at the
right endpoint and the exp(V) blow-up is suppressed everywhere except in a
thin boundary layer where the cumulative integral is pure roundoff.  In
that layer phi' is set to zero (the true flux phi' exp(-V) vanishes there)
and the affected nodes are excluded from the residual.

The event-driven sampler's auxiliary equation has the same solution: the
difference of its two directional components satisfies (d/dx - V') g = 2 f0,
so half that difference solves the equation above.  ``solve_poisson_zigzag_1d``
therefore shares this implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Observable, TargetModel1D

__all__ = [
    "PoissonSolution",
    "SignTable",
    "PoissonError",
    "solve_poisson_overdamped_1d",
    "solve_poisson_zigzag_1d",
    "sign_structure",
]

# |phi'| below this is treated as an exact zero when reading off signs.
SIGN_DEAD_BAND = 1e-9

# Cumulative integrals below this multiple of the accumulated absolute mass
# are considered roundoff; exp(V) must not be applied to them.
_ROUNDOFF_FLOOR = 1e-13


class PoissonError(RuntimeError):
    """Raised when the quadrature solution cannot be stabilised."""


@dataclass(frozen=True)
class PoissonSolution:
    """Grid representation of phi and phi' with residual metadata.

    ``valid`` marks nodes where phi' is quadrature-accurate; the boundary
    layers where the tail integral underflows carry phi' = 0 and are
    excluded from ``residual_max``.
    """

    grid: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    residual: np.ndarray
    residual_max: float
    centered: bool
    valid: np.ndarray

    def phi_at(self, x) -> np.ndarray:
        """Linear interpolation of phi, clamped at the domain edges."""
        return np.interp(x, self.grid, self.phi)

    def dphi_at(self, x) -> np.ndarray:
        """Linear interpolation of phi', clamped at the domain edges."""
        return np.interp(x, self.grid, self.dphi)


@dataclass(frozen=True)
class SignTable:
    """Per-node sign of phi' with a dead band mapped to 0."""

    grid: np.ndarray
    signs: np.ndarray


def _cumtrapz(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    out[0] = 0.0
    np.cumsum(0.5 * h * (values[1:] + values[:-1]), out=out[1:])
    return out


def _cumtrapz_corrected(values: np.ndarray, derivs: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid with the endpoint-derivative correction.

    Subtracting h^2/12 * (g'(x_i) - g'(x_0)) removes the leading
    Euler-Maclaurin error term, which otherwise grows with the integrand's
    curvature and is then amplified by exp(V) in the tails.
    """
    out = _cumtrapz(values, h)
    out -= (h * h / 12.0) * (derivs - derivs[0])
    return out


def solve_poisson_overdamped_1d(model: TargetModel1D, obs: Observable) -> PoissonSolution:
    """Solve -(-V' phi' + phi'') = f - pi(f) with pi(phi) = 0 on the model grid.

    Returns a PoissonSolution whose residual is computed with centered
    finite differences on the interior valid nodes.
    """
    x = model.grid
    h = model.step
    pot = np.asarray(model.potential(x), dtype=float)
    vshift = pot - pot.min()

    fvals = np.asarray(obs.value(x), dtype=float)
    if not np.all(np.isfinite(fvals)):
        raise PoissonError("observable is not finite on the grid")
    # Recenter with the grid quadrature so the cumulative integral returns
    # to zero exactly at the right endpoint.
    mean = model.expectation(fvals)
    f0 = fvals - mean
    if np.max(np.abs(f0)) <= 1e-14 * (1.0 + abs(mean)):
        zero = np.zeros_like(x)
        return PoissonSolution(
            grid=x,
            phi=zero,
            dphi=zero.copy(),
            residual=zero.copy(),
            residual_max=0.0,
            centered=True,
            valid=np.ones(x.shape, dtype=bool),
        )

    density = np.exp(-vshift)
    gradv = np.asarray(model.grad_potential(x), dtype=float)
    fgrad = np.asarray(obs.gradient(x), dtype=float)
    integrand_deriv = (fgrad - f0 * gradv) * density
    integral = _cumtrapz_corrected(f0 * density, integrand_deriv, h)
    abs_mass = _cumtrapz(np.abs(f0) * density, h)

    floor = _ROUNDOFF_FLOOR * abs_mass[-1]
    magnitude = np.abs(integral)
    alive = magnitude > floor

    dphi = np.zeros_like(x)
    if np.any(alive):
        log_dphi = vshift[alive] + np.log(magnitude[alive])
        if np.any(log_dphi > 700.0):
            raise PoissonError("unstable tail; widen tolerance or shrink domain")
        dphi[alive] = -np.sign(integral[alive]) * np.exp(log_dphi)

    if np.any(alive):
        # Roundoff in the cumulative sum is amplified by exp(V); trust a
        # node only where that amplified noise stays below the residual
        # tolerance even after multiplication by V' in the residual.
        noise = 1e-12 * max(float(magnitude.max()), np.finfo(float).tiny)
        amplified = vshift + np.log(noise) + np.log1p(np.abs(gradv))
        valid = alive & (amplified < np.log(3e-4))
    else:
        valid = np.ones_like(alive)

    # phi'' is known exactly from the equation itself, which supplies the
    # correction term for the second cumulative integral as well.
    phi = _cumtrapz_corrected(dphi, gradv * dphi - f0, h)
    phi = phi - model.expectation(phi)

    # Residual of the strong form on interior nodes: phi'' by centered
    # second differences, phi' from the quadrature formula.
    d2phi = np.zeros_like(phi)
    d2phi[1:-1] = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / (h * h)
    residual = gradv * dphi - d2phi - f0
    residual[0] = residual[-1] = 0.0

    usable = valid.copy()
    usable &= np.roll(valid, 1) & np.roll(valid, -1)
    usable[[0, 1, -2, -1]] = False
    residual_max = float(np.max(np.abs(residual[usable]))) if np.any(usable) else 0.0

    return PoissonSolution(
        grid=x,
        phi=phi,
        dphi=dphi,
        residual=residual,
        residual_max=residual_max,
        centered=True,
        valid=valid,
    )


def solve_poisson_zigzag_1d(model: TargetModel1D, obs: Observable) -> PoissonSolution:
    """Auxiliary Poisson solution for coupled event-driven (zigzag) runs.

    Its derivative equals half the difference of the directional components
    of the full switching-state equation and satisfies the same ODE as the
    diffusive case, so the output contract is identical to
    ``solve_poisson_overdamped_1d``.
    """
    return solve_poisson_overdamped_1d(model, obs)


def sign_structure(ps: PoissonSolution) -> SignTable:
    """Per-node sign of phi', with |phi'| < 1e-9 mapped to 0."""
    signs = np.sign(ps.dphi).astype(np.int8)
    signs[np.abs(ps.dphi) < SIGN_DEAD_BAND] = 0
    return SignTable(grid=ps.grid, signs=signs)
