"""Coupling fields and noise-mixing matrices for all sampler families.

Two diffusions share noise through a correlation field alpha(x, y) in
[-1, 1] (scalar case) or a matrix field with alpha^T alpha <= I (vector
case).  The corresponding mixing matrix G satisfies G G^T = Q where Q has
unit diagonal blocks and alpha off the diagonal; every row of blocks obeys
sum_j G_ij G_ij^T = I, which is what keeps each particle's noise an honest
Brownian motion regardless of the coupling.

Coupled event-driven (zigzag) pairs instead share flip events: alpha is a
double-flip rate bounded by the smaller of the two switching rates.

Coupling strength is parametrised by beta throughout: scalar and matrix
couplings use alpha = sin(2 beta) * direction with beta in [0, pi/4], and
zigzag couplings use beta in [0, 1] as a direct rate multiplier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AdmissibilityError, ConfigurationError
from .models import Observable
from .poisson import PoissonSolution

__all__ = [
    "ScalarCoupling1D",
    "MatrixCouplingND",
    "WeightScheme",
    "ZigzagCoupling",
    "SCALAR_KINDS",
    "ZIGZAG_KINDS",
    "alpha_1d",
    "mixing_coefficients",
    "mixing_matrix_1d",
    "reflection_matrix",
    "assemble_block_G",
    "pair_indices",
    "zigzag_alpha",
    "row_orthonormality_defect",
]

SCALAR_KINDS = ("independent", "synchronous", "mirror", "symmetric", "poisson", "observable_grad")
MATRIX_KINDS = ("independent", "reflection_poisson", "reflection_observable")
WEIGHT_KINDS = ("pairwise_fixed", "pairwise_sorted")
ZIGZAG_KINDS = ("independent", "mirror_flip", "symmetric_flip", "poisson_flip")

# Gradients with magnitude below this count as zero when reading signs or
# normalising reflection directions; the safe fallback is no coupling.
_DEAD_BAND = 1e-9


def _check_beta(beta: float, upper: float) -> float:
    beta = float(beta)
    if not (0.0 <= beta <= upper + 1e-12):
        raise ConfigurationError(f"coupling strength {beta} outside [0, {upper}]")
    return min(beta, upper)


@dataclass(frozen=True)
class ScalarCoupling1D:
    """Scalar correlation field for two 1D diffusions.

    ``orientation`` flips the sign pattern of the field; it exists so that
    derivative checks can probe both directions of the same coupling ray.
    """

    kind: str
    strength_beta: float
    poisson: Optional[PoissonSolution] = None
    observable: Optional[Observable] = None
    orientation: int = 1

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS:
            raise ConfigurationError(f"unknown scalar coupling kind {self.kind!r}")
        object.__setattr__(self, "strength_beta", _check_beta(self.strength_beta, math.pi / 4))
        if self.kind == "poisson" and self.poisson is None:
            raise ConfigurationError("poisson coupling needs a PoissonSolution")
        if self.kind == "observable_grad" and self.observable is None:
            raise ConfigurationError("observable_grad coupling needs an Observable")
        if self.orientation not in (-1, 1):
            raise ConfigurationError("orientation must be +-1")

    def sign_pattern(self, x, y) -> np.ndarray:
        """Direction field s(x, y) in {-1, 0, +1} before beta scaling."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "independent":
            return np.zeros(np.broadcast(x, y).shape)
        if self.kind == "synchronous":
            return np.ones(np.broadcast(x, y).shape)
        if self.kind == "mirror":
            return -np.ones(np.broadcast(x, y).shape)
        if self.kind == "symmetric":
            return np.where(x * y <= 0, 1.0, -1.0)
        if self.kind == "poisson":
            gx = self.poisson.dphi_at(x)
            gy = self.poisson.dphi_at(y)
        else:  # observable_grad
            gx = np.asarray(self.observable.gradient(x), dtype=float)
            gy = np.asarray(self.observable.gradient(y), dtype=float)
        s = np.where(gx * gy <= 0, 1.0, -1.0)
        return np.where((np.abs(gx) < _DEAD_BAND) | (np.abs(gy) < _DEAD_BAND), 0.0, s)


def alpha_1d(c: ScalarCoupling1D, x, y):
    """Correlation alpha(x, y) = orientation * sin(2 beta) * s(x, y)."""
    out = (c.orientation * math.sin(2.0 * c.strength_beta)) * c.sign_pattern(x, y)
    return float(out) if np.isscalar(x) and np.isscalar(y) else out


def mixing_coefficients(alpha):
    """Return (cos b, g sin b) with b = arcsin(|alpha|)/2 and g = sgn alpha.

    These are the two distinct entries of the 2x2 mixing matrix; they are
    what the simulation loop actually applies to the noise pair.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(np.abs(alpha) > 1.0 + 1e-12):
        raise AdmissibilityError(f"|alpha| exceeds 1: max {np.max(np.abs(alpha))}")
    a = np.minimum(np.abs(alpha), 1.0)
    root = np.sqrt(1.0 - a * a)
    cos_b = np.sqrt(0.5 * (1.0 + root))
    sin_b = np.sign(alpha) * np.sqrt(0.5 * (1.0 - root))
    return cos_b, sin_b


def mixing_matrix_1d(alpha: float) -> np.ndarray:
    """2x2 noise-mixing matrix G with G G^T = [[1, alpha], [alpha, 1]]."""
    cos_b, gsin_b = mixing_coefficients(float(alpha))
    return np.array([[cos_b, gsin_b], [gsin_b, cos_b]])


def reflection_matrix(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Householder reflection in span{u + v}, or the identity fallback.

    For unit u, v with u + v != 0 the output M reflects u onto -v, so
    v . (M u) = -1: the noise felt by the second particle is maximally
    anti-aligned with the first particle's. Zero inputs or antipodal
    inputs return the identity.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise AdmissibilityError("non-finite reflection direction")
    d = u.shape[0]
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    for norm in (nu, nv):
        if norm > _DEAD_BAND and abs(norm - 1.0) > 1e-9:
            raise AdmissibilityError(f"reflection input must be zero or unit norm, got {norm}")
    if nu < _DEAD_BAND or nv < _DEAD_BAND:
        return np.eye(d)
    w = u + v
    wn = np.linalg.norm(w)
    if wn < 1e-8:
        return np.eye(d)
    w = w / wn
    return np.eye(d) - 2.0 * np.outer(w, w)


@dataclass(frozen=True)
class MatrixCouplingND:
    """Matrix correlation field for diffusions in d dimensions.

    ``grad_phi`` supplies the gradient field steering the reflection for
    the reflection_poisson kind (analytic in d > 1, where no quadrature
    solve is available); reflection_observable uses the observable's
    gradient as a surrogate.
    """

    kind: str
    strength_beta: float
    dim: int
    grad_phi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    observable: Optional[Observable] = None

    def __post_init__(self):
        if self.kind not in MATRIX_KINDS:
            raise ConfigurationError(f"unknown matrix coupling kind {self.kind!r}")
        object.__setattr__(self, "strength_beta", _check_beta(self.strength_beta, math.pi / 4))
        if self.kind == "reflection_poisson" and self.grad_phi is None:
            raise ConfigurationError("reflection_poisson needs a grad_phi field")
        if self.kind == "reflection_observable" and self.observable is None:
            raise ConfigurationError("reflection_observable needs an Observable")

    def gradient_field(self, points: np.ndarray) -> np.ndarray:
        """Steering gradients at an (..., d) array of points."""
        if self.kind == "reflection_poisson":
            return np.asarray(self.grad_phi(points), dtype=float)
        if self.kind == "reflection_observable":
            return np.asarray(self.observable.gradient(points), dtype=float)
        return np.zeros_like(np.asarray(points, dtype=float))

    def pair_matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Orthogonal direction matrix g(x, y) for one particle pair."""
        if self.kind == "independent":
            return np.eye(self.dim)
        gx = self.gradient_field(np.asarray(x, dtype=float))
        gy = self.gradient_field(np.asarray(y, dtype=float))
        return reflection_matrix(_normalise(gx), _normalise(gy))

    def alpha(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Correlation matrix alpha(x, y) = sin(2 beta) g(x, y)."""
        return math.sin(2.0 * self.strength_beta) * self.pair_matrix(x, y)


def _normalise(g: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(g)
    return g / norm if norm > _DEAD_BAND else np.zeros_like(g)


@dataclass(frozen=True)
class WeightScheme:
    """Pairing weights for n coupled particles (n even).

    pairwise_fixed couples (1,2), (3,4), ...; pairwise_sorted re-pairs at
    every evaluation by descending gradient magnitude, ties broken by
    particle index.
    """

    kind: str
    strength_beta: float
    n: int

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ConfigurationError(f"unknown weight scheme {self.kind!r}")
        object.__setattr__(self, "strength_beta", _check_beta(self.strength_beta, math.pi / 4))
        if self.n < 2 or self.n % 2 != 0:
            raise ConfigurationError(f"particle count must be even and >= 2, got {self.n}")


def pair_indices(magnitudes: np.ndarray, scheme: WeightScheme) -> list[tuple[int, int]]:
    """Particle pairs for one evaluation of the block mixing matrix."""
    n = scheme.n
    if scheme.kind == "pairwise_fixed":
        order = np.arange(n)
    else:
        # Stable argsort on the negated magnitudes: descending, ties by index.
        order = np.argsort(-np.asarray(magnitudes, dtype=float), kind="stable")
    return [(int(order[k]), int(order[k + 1])) for k in range(0, n, 2)]


def assemble_block_G(
    positions: np.ndarray, scheme: WeightScheme, pair_matrix_source: MatrixCouplingND
) -> np.ndarray:
    """(nd x nd) mixing matrix: cos(beta) I on the diagonal blocks plus one
    sin(beta) g block per paired particle couple.

    Every block row satisfies sum_j G_ij G_ij^T = I.
    """
    positions = np.asarray(positions, dtype=float)
    n, d = positions.shape
    if n != scheme.n:
        raise ConfigurationError(f"scheme is for n={scheme.n}, got {n} positions")
    if d != pair_matrix_source.dim:
        raise ConfigurationError(f"coupling is for d={pair_matrix_source.dim}, got d={d}")

    big = np.eye(n * d)
    if pair_matrix_source.kind == "independent":
        return big

    grads = pair_matrix_source.gradient_field(positions)
    mags = np.linalg.norm(grads, axis=1)
    cb = math.cos(scheme.strength_beta)
    sb = math.sin(scheme.strength_beta)

    big *= cb
    for i, j in pair_indices(mags, scheme):
        g = reflection_matrix(_normalise(grads[i]), _normalise(grads[j]))
        big[i * d : (i + 1) * d, j * d : (j + 1) * d] = sb * g
        big[j * d : (j + 1) * d, i * d : (i + 1) * d] = sb * g.T
    return big


def row_orthonormality_defect(big_g: np.ndarray, n: int, d: int) -> float:
    """max_i || sum_j G_ij G_ij^T - I ||_max over the block rows."""
    worst = 0.0
    for i in range(n):
        acc = np.zeros((d, d))
        for j in range(n):
            block = big_g[i * d : (i + 1) * d, j * d : (j + 1) * d]
            acc += block @ block.T
        worst = max(worst, float(np.max(np.abs(acc - np.eye(d)))))
    return worst


@dataclass(frozen=True)
class ZigzagCoupling:
    """Double-flip rate field for two coupled zigzag processes."""

    kind: str
    strength_beta: float
    poisson: Optional[PoissonSolution] = None

    def __post_init__(self):
        if self.kind not in ZIGZAG_KINDS:
            raise ConfigurationError(f"unknown zigzag coupling kind {self.kind!r}")
        object.__setattr__(self, "strength_beta", _check_beta(self.strength_beta, 1.0))
        if self.kind == "poisson_flip" and self.poisson is None:
            raise ConfigurationError("poisson_flip coupling needs a PoissonSolution")

    def condition(self, x, y, theta_x, theta_y) -> np.ndarray:
        """Boolean field: does this state call for encouraged double flips?"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        tx = np.asarray(theta_x, dtype=float)
        ty = np.asarray(theta_y, dtype=float)
        if self.kind == "independent":
            return np.zeros(np.broadcast(x, y, tx, ty).shape, dtype=bool)
        if self.kind == "mirror_flip":
            return np.broadcast_to(tx * ty <= 0, np.broadcast(x, y, tx, ty).shape)
        if self.kind == "symmetric_flip":
            return x * y * tx * ty <= 0
        gx = self.poisson.dphi_at(x)
        gy = self.poisson.dphi_at(y)
        cond = gx * gy * tx * ty <= 0
        return cond & (np.abs(gx) >= _DEAD_BAND) & (np.abs(gy) >= _DEAD_BAND)


def zigzag_alpha(c: ZigzagCoupling, x, y, theta_x, theta_y, lam_x, lam_y):
    """Double-flip rate: beta * min(lam_x, lam_y) where the kind's condition
    holds, 0 elsewhere; always within [0, min(lam_x, lam_y)]."""
    lam_x = np.asarray(lam_x, dtype=float)
    lam_y = np.asarray(lam_y, dtype=float)
    if np.any(lam_x < 0) or np.any(lam_y < 0):
        raise AdmissibilityError("switching rates must be nonnegative")
    cap = np.minimum(lam_x, lam_y)
    out = np.where(c.condition(x, y, theta_x, theta_y), c.strength_beta * cap, 0.0)
    return float(out) if out.ndim == 0 else out
