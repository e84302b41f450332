"""Target distributions, observables and 1D quadrature infrastructure.

A 1D target is pi(dx) = exp(-V(x)) dx / Z restricted to a closed interval
[a, b] chosen so that the truncated tail mass is negligible.  All
expectations, normalisation constants and downstream quadratures are
composite-trapezoid sums on a shared uniform grid, which keeps the
cumulative integrals needed elsewhere consistent with the expectations
computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "TargetModel1D",
    "TargetModelND",
    "Observable",
    "ModelError",
    "build_gaussian_model",
    "build_double_well_model",
    "build_cauchy_model",
    "build_gaussian_model_nd",
    "quadrature_expectation",
    "linear_observable",
    "quadratic_observable",
    "mixed_observable",
    "norm_sq_observable",
    "norm_sq_plus_linear_observable",
]


class ModelError(ValueError):
    """Raised for invalid model or observable configuration."""


@dataclass(frozen=True)
class TargetModel1D:
    """One-dimensional target with density proportional to exp(-V).

    Instances are immutable and safe to share across threads.  ``grid``
    is the uniform quadrature grid on ``domain``; ``log_norm`` is log Z
    computed on that grid.
    """

    potential: Callable[[np.ndarray], np.ndarray]
    grad_potential: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]
    grid_size: int
    log_norm: float = field(init=False)
    grid: np.ndarray = field(init=False, repr=False)
    _pot_grid: np.ndarray = field(init=False, repr=False)
    _weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a, b = self.domain
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ModelError(f"invalid domain {self.domain!r}")
        if self.grid_size < 3:
            raise ModelError(f"grid_size must be >= 3, got {self.grid_size}")
        grid = np.linspace(a, b, self.grid_size)
        pot = np.asarray(self.potential(grid), dtype=float)
        if not np.all(np.isfinite(pot)):
            raise ModelError("potential is not finite on the grid")
        # Trapezoid weights times exp(-V), computed relative to min V so the
        # normalisation never overflows for steep potentials.
        vmin = float(pot.min())
        h = grid[1] - grid[0]
        trap = np.full(self.grid_size, h)
        trap[0] = trap[-1] = h / 2.0
        w = trap * np.exp(-(pot - vmin))
        z_shifted = float(w.sum())
        if not (z_shifted > 0.0 and np.isfinite(z_shifted)):
            raise ModelError("exp(-V) has no quadrature mass on the domain")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "_pot_grid", pot)
        object.__setattr__(self, "_weights", w / z_shifted)
        object.__setattr__(self, "log_norm", math.log(z_shifted) - vmin)

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def density_weights(self) -> np.ndarray:
        """Normalised per-node masses of pi on the grid (sum to 1)."""
        return self._weights

    def expectation(self, values: np.ndarray) -> float:
        """Trapezoid expectation of grid-sampled values under pi."""
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ModelError("non-finite integrand")
        return float(self._weights @ values)


@dataclass(frozen=True)
class TargetModelND:
    """d-dimensional target with density proportional to exp(-V)."""

    dim: int
    potential: Callable[[np.ndarray], np.ndarray]
    grad_potential: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.dim < 1:
            raise ModelError(f"dim must be positive, got {self.dim}")


@dataclass(frozen=True)
class Observable:
    """Observable f with its gradient and mean under the target.

    ``value`` and ``gradient`` must accept array input (grid vectors in
    1D, (..., d) points in d dimensions).  ``mean_under_target`` is pi(f),
    supplied analytically when known and otherwise computed by quadrature
    in 1D.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    mean_under_target: float
    name: str = "f"

    def centered(self, x: np.ndarray) -> np.ndarray:
        """f0 = f - pi(f)."""
        return np.asarray(self.value(x), dtype=float) - self.mean_under_target


def quadrature_expectation(model: TargetModel1D, g: Callable[[np.ndarray], np.ndarray]) -> float:
    """Expectation of g under pi by composite trapezoid on the model grid.

    Raises ModelError("non-finite integrand") if g is not finite on the grid.
    """
    return model.expectation(np.asarray(g(model.grid), dtype=float))


def build_gaussian_model(sigma: float, domain_halfwidth: float, grid_size: int) -> TargetModel1D:
    """Gaussian target: V = x^2 / (2 sigma^2) truncated to +-domain_halfwidth.

    Requires domain_halfwidth >= 6 sigma so the discarded tail mass is
    far below quadrature accuracy.
    """
    if sigma <= 0:
        raise ModelError(f"sigma must be positive, got {sigma}")
    if domain_halfwidth < 6 * sigma:
        raise ModelError(
            f"domain_halfwidth {domain_halfwidth} < 6*sigma = {6 * sigma}; tails not negligible"
        )
    inv_var = 1.0 / (sigma * sigma)

    def potential(x):
        return 0.5 * inv_var * np.square(x)

    def grad(x):
        return inv_var * np.asarray(x, dtype=float)

    return TargetModel1D(potential, grad, (-domain_halfwidth, domain_halfwidth), grid_size)


def build_double_well_model(
    a: float, b: float, domain_halfwidth: Optional[float] = None, grid_size: int = 2001
) -> TargetModel1D:
    """Double-well target: V = a x^4 - b x^2 with a > 0."""
    if a <= 0:
        raise ModelError(f"quartic coefficient must be positive, got {a}")
    if domain_halfwidth is None:
        # Wells sit at x^2 = b/(2a); pick a box where V has climbed ~40
        # units above the well bottom, i.e. tail mass far below 1e-12.
        well = math.sqrt(max(b, 0.0) / (2 * a)) if b > 0 else 0.0
        lo = -a * well**4 if b > 0 else 0.0
        hw = well
        while a * hw**4 - b * hw**2 - lo < 40.0:
            hw += 0.25
        domain_halfwidth = hw

    def potential(x):
        x = np.asarray(x, dtype=float)
        return a * x**4 - b * x**2

    def grad(x):
        x = np.asarray(x, dtype=float)
        return 4 * a * x**3 - 2 * b * x

    return TargetModel1D(potential, grad, (-domain_halfwidth, domain_halfwidth), grid_size)


def build_cauchy_model(domain_halfwidth: float = 2000.0, grid_size: int = 400001) -> TargetModel1D:
    """Heavy-tailed target: V = log(1 + x^2), so pi is the Cauchy density.

    The switching-rate bound for event-driven runs uses |V'| <= 1 and a
    Lipschitz constant of 2 for V'.
    """

    def potential(x):
        x = np.asarray(x, dtype=float)
        return np.log1p(x * x)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return 2 * x / (1 + x * x)

    return TargetModel1D(potential, grad, (-domain_halfwidth, domain_halfwidth), grid_size)


def build_gaussian_model_nd(dim: int, sigma: float = 1.0) -> TargetModelND:
    """Isotropic Gaussian in d dimensions: V = |x|^2 / (2 sigma^2)."""
    if sigma <= 0:
        raise ModelError(f"sigma must be positive, got {sigma}")
    inv_var = 1.0 / (sigma * sigma)

    def potential(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * inv_var * np.sum(np.square(x), axis=-1)

    def grad(x):
        return inv_var * np.asarray(x, dtype=float)

    return TargetModelND(dim, potential, grad)


def _observable(model, value, gradient, name, exact_mean=None) -> Observable:
    if exact_mean is not None:
        mean = float(exact_mean)
    elif isinstance(model, TargetModel1D):
        mean = quadrature_expectation(model, value)
    else:
        raise ModelError(
            f"observable {name!r}: supply an analytic mean for d-dimensional targets"
        )
    return Observable(value=value, gradient=gradient, mean_under_target=mean, name=name)


def linear_observable(model: TargetModel1D) -> Observable:
    """f(x) = x."""
    return _observable(
        model,
        lambda x: np.asarray(x, dtype=float),
        lambda x: np.ones_like(np.asarray(x, dtype=float)),
        "linear",
    )


def quadratic_observable(model: TargetModel1D) -> Observable:
    """f(x) = x^2."""
    return _observable(
        model,
        lambda x: np.square(np.asarray(x, dtype=float)),
        lambda x: 2.0 * np.asarray(x, dtype=float),
        "quadratic",
    )


def mixed_observable(model: TargetModel1D, c1: float = 1.0, c2: float = -1.0) -> Observable:
    """f(x) = c1 x^2 + c2 x; the default is the mixed benchmark x^2 - x."""

    def value(x):
        x = np.asarray(x, dtype=float)
        return c1 * x * x + c2 * x

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return 2 * c1 * x + c2

    return _observable(model, value, gradient, f"mixed({c1},{c2})")


def norm_sq_observable(model: TargetModelND, scale: float = 0.5, sigma: float = 1.0) -> Observable:
    """f(x) = scale * |x|^2 for an isotropic Gaussian target.

    The mean is exact: scale * d * sigma^2.
    """

    def value(x):
        x = np.asarray(x, dtype=float)
        return scale * np.sum(np.square(x), axis=-1)

    def gradient(x):
        return 2.0 * scale * np.asarray(x, dtype=float)

    return _observable(
        model, value, gradient, f"norm_sq({scale})", exact_mean=scale * model.dim * sigma**2
    )


def norm_sq_plus_linear_observable(
    model: TargetModelND, c1: float = 5.0, c2: float = 1.0, sigma: float = 1.0
) -> Observable:
    """f(x) = c1 |x|^2 + c2 (1 . x) for an isotropic Gaussian target."""

    def value(x):
        x = np.asarray(x, dtype=float)
        return c1 * np.sum(np.square(x), axis=-1) + c2 * np.sum(x, axis=-1)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * c1 * x + c2

    return _observable(
        model, value, gradient, f"norm_sq_plus_linear({c1},{c2})", exact_mean=c1 * model.dim * sigma**2
    )
