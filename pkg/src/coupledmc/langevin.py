"""Euler-Maruyama simulation of coupled overdamped and underdamped Langevin
dynamics with correlated noise.

The update rules are

    overdamped:   X+ = X - grad V(X) dt + sqrt(2 dt) (G xi)
    underdamped:  q+ = q + p/m dt
                  p+ = p - grad V(q) dt - gamma p dt + sqrt(2 gamma dt) (G xi)

with xi i.i.d. standard normal and G the mixing matrix assembled at the
pre-step state.  The q update uses the pre-step momentum.

Noise handling: every replicate owns a counter-based (Philox) stream seeded
from (seed, replicate_index), consumed in a fixed particle-major order.
Because each step consumes exactly one normal per particle coordinate no
matter which coupling is active, runs with different couplings see the same
underlying noise, which is what makes common-random-number sweeps across
coupling strengths meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .coupling import (
    MatrixCouplingND,
    ScalarCoupling1D,
    WeightScheme,
    alpha_1d,
    mixing_coefficients,
)
from .errors import ConfigurationError, DivergenceError
from .models import Observable, TargetModel1D, TargetModelND

__all__ = [
    "LangevinConfig",
    "TrajectorySample",
    "PairSweepStats",
    "step_overdamped",
    "step_underdamped",
    "run_langevin",
    "run_scalar_pair_sweep",
    "run_block_sweep",
]

_DIVERGENCE_BOUND = 1e8
_CHUNK_STEPS = 4096

Coupling = Union[ScalarCoupling1D, tuple[WeightScheme, MatrixCouplingND], None]


@dataclass(frozen=True)
class LangevinConfig:
    """Run description for a coupled Langevin simulation.

    ``coupling`` is None (independent particles), a ScalarCoupling1D for a
    pair of 1D particles, or a (WeightScheme, MatrixCouplingND) tuple for
    block-coupled ensembles.  ``burn_in`` and ``t_total`` are in simulated
    time units.
    """

    model: Union[TargetModel1D, TargetModelND]
    n_particles: int
    coupling: Coupling
    dt: float
    t_total: float
    burn_in: float
    seed: int
    dynamics: str = "overdamped"
    gamma: float = 1.0
    mass: float = 1.0
    thin_stride: int = 100
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dt <= 0 or self.dt > 0.1:
            raise ConfigurationError(f"dt must lie in (0, 0.1], got {self.dt}")
        if self.t_total <= self.burn_in:
            raise ConfigurationError("t_total must exceed burn_in")
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be nonnegative")
        if self.n_particles < 1:
            raise ConfigurationError("need at least one particle")
        if self.dynamics not in ("overdamped", "underdamped"):
            raise ConfigurationError(f"unknown dynamics {self.dynamics!r}")
        if self.dynamics == "underdamped" and (self.gamma <= 0 or self.mass <= 0):
            raise ConfigurationError("underdamped dynamics needs gamma > 0 and mass > 0")
        if isinstance(self.coupling, ScalarCoupling1D) and self.n_particles != 2:
            raise ConfigurationError("scalar couplings pair exactly 2 particles")

    @property
    def dim(self) -> int:
        return self.model.dim if isinstance(self.model, TargetModelND) else 1


@dataclass
class TrajectorySample:
    """Thinned trajectory: times plus per-time (n, d) positions."""

    times: np.ndarray
    positions: np.ndarray
    momenta: Optional[np.ndarray] = None


def _replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(replicate,))
    return np.random.Generator(np.random.Philox(ss))


def _check_finite(state: np.ndarray, step: int):
    if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > _DIVERGENCE_BOUND:
        raise DivergenceError(step)


def step_overdamped(state, dt, model, G, noise) -> np.ndarray:
    """One explicit step X+ = X - grad V(X) dt + sqrt(2 dt) (G noise).

    ``state`` and ``noise`` are (n, d); ``G`` is an (nd, nd) mixing matrix
    or None for independent noise.
    """
    state = np.asarray(state, dtype=float)
    noise = np.asarray(noise, dtype=float)
    mixed = noise if G is None else (G @ noise.reshape(-1)).reshape(noise.shape)
    grad = np.asarray(model.grad_potential(state), dtype=float)
    out = state - grad * dt + math.sqrt(2.0 * dt) * mixed
    _check_finite(out, -1)
    return out


def step_underdamped(q, p, dt, model, gamma, mass, G_momentum, noise):
    """One explicit step of the kinetic dynamics; coupling acts on the
    momentum noise only."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    noise = np.asarray(noise, dtype=float)
    mixed = noise if G_momentum is None else (G_momentum @ noise.reshape(-1)).reshape(noise.shape)
    grad = np.asarray(model.grad_potential(q), dtype=float)
    q_new = q + (p / mass) * dt
    p_new = p - grad * dt - gamma * p * dt + math.sqrt(2.0 * gamma * dt) * mixed
    _check_finite(q_new, -1)
    return q_new, p_new


# ---------------------------------------------------------------------------
# Vectorised pair engine (1D, two particles, many chains)
# ---------------------------------------------------------------------------


@dataclass
class PairSweepStats:
    """Accumulated statistics of a multi-variant pair sweep.

    Arrays are indexed (variant, replicate, ...).  ``batch_means`` holds the
    per-batch time averages of F over the post-burn-in window.
    """

    batch_means: np.ndarray
    mean_f_particle: np.ndarray
    var_f_particle: np.ndarray
    mean_abs_distance: np.ndarray
    samples: Optional[np.ndarray] = None

    @property
    def mean_F(self) -> np.ndarray:
        return self.batch_means.mean(axis=-1)


def _pair_mixed_noise(coupling: ScalarCoupling1D, x, y, xi1, xi2):
    """Apply the 2x2 mixing matrix rows to a shared noise pair."""
    kind = coupling.kind
    strength = coupling.orientation * math.sin(2.0 * coupling.strength_beta)
    if kind == "independent" or strength == 0.0:
        return xi1, xi2
    if kind in ("synchronous", "mirror"):
        alpha = strength if kind == "synchronous" else -strength
        cb, sb = mixing_coefficients(alpha)
        return cb * xi1 + sb * xi2, sb * xi1 + cb * xi2
    alpha = strength * coupling.sign_pattern(x, y)
    cb, sb = mixing_coefficients(alpha)
    return cb * xi1 + sb * xi2, sb * xi1 + cb * xi2


class _StackedAlpha:
    """Evaluates alpha for a stack of pair couplings on (V, R) state arrays.

    Constant sign patterns are precomputed; state-dependent patterns are
    evaluated with row-sliced vectorised operations, grouping poisson
    couplings that share a solution so the interpolation runs once.
    """

    def __init__(self, couplings: Sequence[ScalarCoupling1D], n_replicates: int):
        V, R = len(couplings), n_replicates
        self.strength = np.array(
            [c.orientation * math.sin(2.0 * c.strength_beta) for c in couplings]
        )[:, None]
        self.base = np.zeros((V, R))
        self.sym_rows = np.array([c.kind == "symmetric" for c in couplings])
        for v, c in enumerate(couplings):
            if c.kind == "synchronous":
                self.base[v] = 1.0
            elif c.kind == "mirror":
                self.base[v] = -1.0
        self.interp_groups = []
        grad_of = {}
        for v, c in enumerate(couplings):
            if c.kind == "poisson":
                key = ("p", id(c.poisson))
                fn = c.poisson.dphi_at
            elif c.kind == "observable_grad":
                key = ("o", id(c.observable))
                fn = lambda z, g=c.observable.gradient: np.asarray(g(z), dtype=float)
            else:
                continue
            grad_of.setdefault(key, (fn, []))[1].append(v)
        for fn, rows in grad_of.values():
            self.interp_groups.append((fn, np.array(rows)))
        self.any_state_dep = bool(self.sym_rows.any() or self.interp_groups)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        s = self.base.copy() if self.any_state_dep else self.base
        if self.sym_rows.any():
            xr = x[self.sym_rows]
            s[self.sym_rows] = np.where(xr * y[self.sym_rows] <= 0, 1.0, -1.0)
        for fn, rows in self.interp_groups:
            gx = fn(x[rows])
            gy = fn(y[rows])
            sr = np.where(gx * gy <= 0, 1.0, -1.0)
            sr[(np.abs(gx) < 1e-9) | (np.abs(gy) < 1e-9)] = 0.0
            s[rows] = sr
        return self.strength * s


def run_scalar_pair_sweep(
    model: TargetModel1D,
    couplings: Sequence[ScalarCoupling1D],
    observable: Observable,
    n_replicates: int,
    dt: float,
    t_total: float,
    burn_in: float,
    seed: int,
    n_batches: int = 50,
    collect_stride: Optional[int] = None,
    x0: Optional[tuple[float, float]] = None,
) -> PairSweepStats:
    """Simulate every coupling variant over shared per-replicate noise.

    All variants advance in lockstep through identical noise streams, so
    differences between variants are common-random-number comparisons.
    Returns batch means of F = (f(x) + f(y))/2 plus marginal diagnostics.
    """
    n_var = len(couplings)
    steps = int(round(t_total / dt))
    burn_steps = int(round(burn_in / dt))
    record = steps - burn_steps
    if record <= 0:
        raise ConfigurationError("empty observation window")
    batch_len = record // n_batches
    if batch_len < 1:
        raise ConfigurationError("fewer post-burn-in steps than batches")
    used = batch_len * n_batches

    R = n_replicates
    rngs = [_replicate_rng(seed, r) for r in range(R)]
    x = np.empty((n_var, R))
    y = np.empty((n_var, R))
    if x0 is None:
        # Initial states come from each replicate's own stream, so results
        # do not depend on how replicates are grouped into runs.
        inits = np.stack([rng.standard_normal(2) for rng in rngs], axis=1)
        x[:] = inits[0]
        y[:] = inits[1]
    else:
        x[:] = x0[0]
        y[:] = x0[1]

    fval = observable.value
    batch_sums = np.zeros((n_var, R, n_batches))
    f_sum = np.zeros((n_var, R, 2))
    f_sq = np.zeros((n_var, R, 2))
    dist_sum = np.zeros((n_var, R))
    samples = [] if collect_stride else None

    alpha_of = _StackedAlpha(couplings, R)
    sqrt2dt = math.sqrt(2.0 * dt)
    grad = model.grad_potential

    done = 0
    while done < steps:
        chunk = min(_CHUNK_STEPS, steps - done)
        noise = np.stack([rng.standard_normal((chunk, 2)) for rng in rngs], axis=1)
        for k in range(chunk):
            step = done + k
            xi1 = noise[k, :, 0]
            xi2 = noise[k, :, 1]
            alpha = alpha_of(x, y)
            a = np.abs(alpha)
            root = np.sqrt(1.0 - a * a)
            cb = np.sqrt(0.5 * (1.0 + root))
            sb = np.sign(alpha) * np.sqrt(0.5 * (1.0 - root))
            x = x - grad(x) * dt + sqrt2dt * (cb * xi1 + sb * xi2)
            y = y - grad(y) * dt + sqrt2dt * (sb * xi1 + cb * xi2)
            idx = step - burn_steps
            if idx >= 0:
                fx = fval(x)
                fy = fval(y)
                if idx < used:
                    batch_sums[:, :, idx // batch_len] += 0.5 * (fx + fy)
                f_sum[:, :, 0] += fx
                f_sum[:, :, 1] += fy
                f_sq[:, :, 0] += fx * fx
                f_sq[:, :, 1] += fy * fy
                dist_sum += np.abs(x - y)
                if collect_stride and idx % collect_stride == 0:
                    samples.append(np.stack([x, y], axis=-1).copy())
        done += chunk
        _check_finite(x, done)
        _check_finite(y, done)

    return PairSweepStats(
        batch_means=batch_sums / batch_len,
        mean_f_particle=f_sum / record,
        var_f_particle=f_sq / record - (f_sum / record) ** 2,
        mean_abs_distance=dist_sum / record,
        samples=np.stack(samples, axis=2) if samples else None,
    )


# ---------------------------------------------------------------------------
# Vectorised block engine (n particles in d dimensions, paired couplings)
# ---------------------------------------------------------------------------


def _block_mixed_noise(scheme: WeightScheme, source: MatrixCouplingND, x, xi):
    """Mixing for (R, n, d) states: cos(beta) xi plus the paired reflected
    contribution, with pairs re-evaluated from the current state."""
    if source.kind == "independent" or scheme.strength_beta == 0.0:
        return xi
    R, n, d = x.shape
    grads = source.gradient_field(x)
    mags = np.linalg.norm(grads, axis=2)
    if scheme.kind == "pairwise_sorted":
        order = np.argsort(-mags, axis=1, kind="stable")
    else:
        order = np.broadcast_to(np.arange(n), (R, n)).copy()
    i_idx = order[:, 0::2]
    j_idx = order[:, 1::2]

    take = lambda arr, idx: np.take_along_axis(arr, idx[:, :, None], axis=1)
    gi = take(grads, i_idx)
    gj = take(grads, j_idx)
    ni = np.linalg.norm(gi, axis=2, keepdims=True)
    nj = np.linalg.norm(gj, axis=2, keepdims=True)
    ui = np.where(ni > 1e-9, gi / np.maximum(ni, 1e-300), 0.0)
    uj = np.where(nj > 1e-9, gj / np.maximum(nj, 1e-300), 0.0)
    w = ui + uj
    wn = np.linalg.norm(w, axis=2, keepdims=True)
    # Identity fallback: either gradient vanishes or the directions are
    # antipodal; the reflected noise then reduces to the partner's noise.
    use_reflection = (ni > 1e-9) & (nj > 1e-9) & (wn > 1e-8)
    w_hat = np.where(use_reflection, w / np.maximum(wn, 1e-300), 0.0)

    xi_i = take(xi, i_idx)
    xi_j = take(xi, j_idx)
    refl_j = xi_j - 2.0 * w_hat * np.sum(w_hat * xi_j, axis=2, keepdims=True)
    refl_i = xi_i - 2.0 * w_hat * np.sum(w_hat * xi_i, axis=2, keepdims=True)

    cb = math.cos(scheme.strength_beta)
    sb = math.sin(scheme.strength_beta)
    mixed = np.empty_like(xi)
    np.put_along_axis(mixed, i_idx[:, :, None], cb * xi_i + sb * refl_j, axis=1)
    np.put_along_axis(mixed, j_idx[:, :, None], cb * xi_j + sb * refl_i, axis=1)
    return mixed


def run_block_sweep(
    model: TargetModelND,
    variants: Sequence[tuple[WeightScheme, MatrixCouplingND]],
    observable: Observable,
    n_replicates: int,
    dt: float,
    t_total: float,
    burn_in: float,
    seed: int,
    n_batches: int = 50,
) -> PairSweepStats:
    """Common-random-number sweep over block coupling variants.

    Returns batch means of F = mean_i f(x_i) per (variant, replicate).
    """
    steps = int(round(t_total / dt))
    burn_steps = int(round(burn_in / dt))
    record = steps - burn_steps
    if record <= 0:
        raise ConfigurationError("empty observation window")
    batch_len = record // n_batches
    if batch_len < 1:
        raise ConfigurationError("fewer post-burn-in steps than batches")
    used = batch_len * n_batches

    d = model.dim
    R = n_replicates
    n_var = len(variants)
    n = variants[0][0].n
    for scheme, src in variants:
        if scheme.n != n or src.dim != d:
            raise ConfigurationError("all sweep variants must share n and d")

    batch_sums = np.zeros((n_var, R, n_batches))
    sqrt2dt = math.sqrt(2.0 * dt)
    fval = observable.value
    mean_f = np.zeros((n_var, R, n))
    var_f = np.zeros((n_var, R, n))

    for v, (scheme, source) in enumerate(variants):
        rngs = [_replicate_rng(seed, r) for r in range(R)]
        x = np.stack([rng.standard_normal((n, d)) for rng in rngs], axis=0)
        done = 0
        while done < steps:
            chunk = min(512, steps - done)
            noise = np.stack([rng.standard_normal((chunk, n, d)) for rng in rngs], axis=1)
            for k in range(chunk):
                step = done + k
                mixed = _block_mixed_noise(scheme, source, x, noise[k])
                x = x - model.grad_potential(x) * dt + sqrt2dt * mixed
                idx = step - burn_steps
                if 0 <= idx < used:
                    fx = fval(x)
                    batch_sums[v, :, idx // batch_len] += fx.mean(axis=1)
                    mean_f[v] += fx
                    var_f[v] += fx * fx
            done += chunk
            _check_finite(x, done)

    mean_f /= used
    var_f = var_f / used - mean_f**2
    return PairSweepStats(
        batch_means=batch_sums / batch_len,
        mean_f_particle=mean_f,
        var_f_particle=var_f,
        mean_abs_distance=np.zeros((n_var, R)),
    )


# ---------------------------------------------------------------------------
# Single-run front end
# ---------------------------------------------------------------------------


def run_langevin(config: LangevinConfig, observable: Observable):
    """Simulate one configured run and return (TrajectorySample, F-series).

    The F-series holds F(state) = mean_i f(x_i) at every post-burn-in step;
    the trajectory is thinned by ``config.thin_stride``.  Identical config
    and seed reproduce both bit for bit.
    """
    steps = int(round(config.t_total / config.dt))
    burn_steps = int(round(config.burn_in / config.dt))
    record = steps - burn_steps
    if record <= 0:
        raise ConfigurationError("empty observation window")

    n = config.n_particles
    d = config.dim
    dt = config.dt
    rng = _replicate_rng(config.seed, 0)
    underdamped = config.dynamics == "underdamped"

    if config.x0 is not None:
        state = np.array(config.x0, dtype=float).reshape(n, d)
    else:
        state = rng.standard_normal((n, d))
    mom = np.zeros((n, d)) if underdamped else None

    fseries = np.empty(record)
    times = []
    positions = []
    momenta = [] if underdamped else None

    scalar_pair = isinstance(config.coupling, ScalarCoupling1D)
    block = isinstance(config.coupling, tuple)
    sqrt_noise = math.sqrt(2.0 * config.gamma * dt) if underdamped else math.sqrt(2.0 * dt)
    grad = config.model.grad_potential
    state_buf = np.empty((_CHUNK_STEPS, n, d))
    mom_buf = np.empty((_CHUNK_STEPS, n, d)) if underdamped else None

    done = 0
    while done < steps:
        chunk = min(_CHUNK_STEPS, steps - done)
        noise = rng.standard_normal((chunk, n, d))
        for k in range(chunk):
            xi = noise[k]
            if scalar_pair:
                nx, ny = _pair_mixed_noise(
                    config.coupling, state[0, 0], state[1, 0], xi[0, 0], xi[1, 0]
                )
                mixed = np.array([[nx], [ny]])
            elif block:
                scheme, source = config.coupling
                mixed = _block_mixed_noise(scheme, source, state[None], xi[None])[0]
            else:
                mixed = xi
            if underdamped:
                q_new = state + (mom / config.mass) * dt
                mom = mom - grad(state) * dt - config.gamma * mom * dt + sqrt_noise * mixed
                state = q_new
                mom_buf[k] = mom
            else:
                state = state - grad(state) * dt + sqrt_noise * mixed
            state_buf[k] = state
        _check_finite(state, done + chunk)

        # Vectorised bookkeeping over the buffered chunk.
        idx = np.arange(done, done + chunk) - burn_steps
        live = idx >= 0
        if np.any(live):
            chunk_states = state_buf[:chunk][live]
            values = np.asarray(
                observable.value(chunk_states[:, :, 0] if d == 1 else chunk_states), dtype=float
            )
            fseries[idx[live]] = values.mean(axis=1)
            thin = live & (idx % config.thin_stride == 0)
            for k in np.nonzero(thin)[0]:
                times.append((done + k + 1) * dt)
                positions.append(state_buf[k].copy())
                if underdamped:
                    momenta.append(mom_buf[k].copy())
        done += chunk

    sample = TrajectorySample(
        times=np.asarray(times),
        positions=np.asarray(positions),
        momenta=np.asarray(momenta) if underdamped else None,
    )
    return sample, fseries
