"""Event-driven simulation of two coupled 1D zigzag processes.

Each particle moves ballistically with velocity theta in {-1, +1} and
reverses direction at rate lambda(x, theta) = max(0, theta V'(x)) + gamma(x).
Coupling redistributes flip events: with double-flip rate alpha, the three
transitions fire at rates

    single x-flip:  lambda(x, theta_x) - alpha
    single y-flip:  lambda(y, theta_y) - alpha
    double flip:    alpha

whose total lambda_x + lambda_y - alpha never exceeds lambda_x + lambda_y.
Event times are drawn by thinning: over a lookahead horizon h the rate of
each particle is bounded by max(0, theta V'(x)) + L h + gamma_max with L a
declared Lipschitz constant of V', so the summed per-particle bounds always
dominate the total rate.

Between events all statistics are integrated exactly where the integrand is
piecewise linear (position moments, |x - y|) and with a per-segment
three-point Simpson rule otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .coupling import ZigzagCoupling, zigzag_alpha
from .errors import AdmissibilityError, ConfigurationError
from .models import Observable, TargetModel1D

__all__ = [
    "ZigzagState",
    "RateSpec",
    "ZigzagStats",
    "ZigzagSweepStats",
    "coupled_event_rates",
    "simulate_coupled_zigzag",
    "run_zigzag_sweep",
]

_RATE_SLACK = 1e-12


@dataclass(frozen=True)
class ZigzagState:
    x: float
    y: float
    theta_x: int
    theta_y: int
    t: float = 0.0

    def __post_init__(self):
        if self.theta_x not in (-1, 1) or self.theta_y not in (-1, 1):
            raise ConfigurationError("velocities must be +-1")


@dataclass(frozen=True)
class RateSpec:
    """Switching rate lambda(x, theta) = max(0, theta V'(x)) + gamma(x).

    ``lipschitz`` is the declared Lipschitz constant of V' on the working
    box (exact for quadratic potentials, 2 for the heavy-tailed log target);
    ``gamma_max`` bounds the excess rate.  Both feed the thinning bound.
    """

    grad_potential: Callable[[np.ndarray], np.ndarray]
    excess: Union[float, Callable[[np.ndarray], np.ndarray]] = 0.1
    lipschitz: float = 1.0
    gamma_max: Optional[float] = None

    def __post_init__(self):
        if self.lipschitz < 0:
            raise ConfigurationError("lipschitz constant must be nonnegative")
        if isinstance(self.excess, (int, float)):
            if self.excess < 0:
                raise ConfigurationError("excess rate must be nonnegative")
            object.__setattr__(self, "gamma_max", float(self.excess))
        elif self.gamma_max is None:
            raise ConfigurationError("supply gamma_max for a state-dependent excess rate")

    def gamma(self, x):
        if callable(self.excess):
            return np.asarray(self.excess(x), dtype=float)
        return np.full_like(np.asarray(x, dtype=float), self.excess)

    def switching_rate(self, x, theta):
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return np.maximum(0.0, theta * np.asarray(self.grad_potential(x), dtype=float)) + self.gamma(x)


def coupled_event_rates(state: ZigzagState, rates: RateSpec, coupling: ZigzagCoupling):
    """Rates (r_x, r_y, r_xy) of the three coupled transitions at a state.

    Raises AdmissibilityError if any rate is negative beyond roundoff; the
    identity r_x + r_y + r_xy = lambda_x + lambda_y - alpha is asserted.
    """
    lam_x = float(rates.switching_rate(state.x, state.theta_x))
    lam_y = float(rates.switching_rate(state.y, state.theta_y))
    alpha = float(
        zigzag_alpha(coupling, state.x, state.y, state.theta_x, state.theta_y, lam_x, lam_y)
    )
    r_x = lam_x - alpha
    r_y = lam_y - alpha
    if min(r_x, r_y, alpha) < -_RATE_SLACK:
        raise AdmissibilityError(
            f"negative transition rate at {state}: ({r_x}, {r_y}, {alpha})"
        )
    assert abs((r_x + r_y + alpha) - (lam_x + lam_y - alpha)) <= 1e-12 * (1 + lam_x + lam_y)
    return max(r_x, 0.0), max(r_y, 0.0), max(alpha, 0.0)


@dataclass
class ZigzagStats:
    """Time-weighted statistics of one coupled run."""

    mean_F: float
    asym_var: float
    ci_halfwidth: float
    opposite_fraction: float
    mean_abs_distance: float
    mean_x: float
    var_x: float
    mean_y: float
    var_y: float
    t_observed: float
    n_events: dict
    events: Optional[np.ndarray] = None


@dataclass
class ZigzagSweepStats:
    """Per-(variant, replicate) statistics of a vectorised sweep."""

    batch_means: np.ndarray
    opposite_fraction: np.ndarray
    mean_abs_distance: np.ndarray
    mean_x: np.ndarray
    var_x: np.ndarray
    mean_y: np.ndarray
    var_y: np.ndarray
    t_batch: float

    @property
    def mean_F(self) -> np.ndarray:
        return self.batch_means.mean(axis=-1)


def _abs_segment_integral(a, b, length):
    """int_0^length |a + b s| ds, exact for the piecewise-linear integrand."""
    end = a + b * length
    crossing = np.zeros_like(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        crossing = np.where(b != 0.0, -a / np.where(b != 0.0, b, 1.0), -1.0)
    inside = (crossing > 0.0) & (crossing < length)
    trapezoid = 0.5 * (np.abs(a) + np.abs(end)) * length
    split = 0.5 * (np.abs(a) * crossing + np.abs(end) * (length - crossing))
    return np.where(inside, split, trapezoid)


def run_zigzag_sweep(
    model: TargetModel1D,
    rates: RateSpec,
    couplings: Sequence[ZigzagCoupling],
    observable: Observable,
    n_replicates: int,
    t_total: float,
    burn_in: float,
    seed: int,
    n_batches: int = 50,
    horizon: float = 0.5,
    record_events: bool = False,
) -> tuple[ZigzagSweepStats, Optional[list]]:
    """Thinning-based simulation of all coupling variants, vectorised over
    (variant, replicate) chains.

    All chains share one counter-based stream; each loop iteration draws the
    same number of variates per chain, so a fixed (config, seed) reproduces
    the sweep exactly.  Statistics are accumulated per batch over the
    post-burn-in window.
    """
    if t_total <= burn_in:
        raise ConfigurationError("empty observation window")
    n_var = len(couplings)
    R = n_replicates
    C = n_var * R
    t_batch = (t_total - burn_in) / n_batches

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xE1,))))
    x = np.tile(rng.standard_normal(R), n_var)
    y = np.tile(rng.standard_normal(R), n_var)
    tx = np.tile(np.where(rng.random(R) < 0.5, -1.0, 1.0), n_var)
    ty = np.tile(np.where(rng.random(R) < 0.5, -1.0, 1.0), n_var)
    t = np.zeros(C)
    h_rem = np.zeros(C)
    bound = np.ones(C)

    gradp = rates.grad_potential
    gmax = rates.gamma_max
    lip = rates.lipschitz

    batch_int = np.zeros((C, n_batches))
    opp_time = np.zeros(C)
    dist_int = np.zeros(C)
    x_int = np.zeros(C)
    x2_int = np.zeros(C)
    y_int = np.zeros(C)
    y2_int = np.zeros(C)
    fval = observable.value
    events = [] if record_events else None

    # Variant dispatch table for the double-flip rate.
    def alpha_all(xv, yv, txv, tyv, lx, ly):
        out = np.empty_like(xv)
        for v, coup in enumerate(couplings):
            sl = slice(v * R, (v + 1) * R)
            out[sl] = zigzag_alpha(coup, xv[sl], yv[sl], txv[sl], tyv[sl], lx[sl], ly[sl])
        return out

    active = np.ones(C, dtype=bool)
    guard = 0
    max_iters = int(5e8)
    while np.any(active):
        guard += 1
        if guard > max_iters:
            raise RuntimeError("zigzag event loop failed to terminate")

        stale = active & (h_rem <= 1e-12)
        if np.any(stale):
            bx = np.maximum(0.0, tx[stale] * gradp(x[stale])) + lip * horizon + gmax
            by = np.maximum(0.0, ty[stale] * gradp(y[stale])) + lip * horizon + gmax
            bound[stale] = bx + by
            h_rem[stale] = horizon

        tau = rng.exponential(1.0, C) / bound
        u_accept = rng.random(C)
        u_select = rng.random(C)

        # Segment caps: horizon expiry, batch boundary (or burn-in end), T.
        # Chains that land exactly on a batch boundary must see the *next*
        # boundary (and the last batch ends at t_total exactly); otherwise
        # roundoff in t_batch could pin cap at zero and stall the chain.
        in_obs = t >= burn_in
        seg_idx = np.clip(((t - burn_in) / t_batch).astype(int), 0, n_batches - 1)
        boundary = np.where(seg_idx >= n_batches - 1, t_total, burn_in + (seg_idx + 1) * t_batch)
        bump = in_obs & (boundary <= t)
        seg_idx = np.where(bump, np.minimum(seg_idx + 1, n_batches - 1), seg_idx)
        boundary = np.where(seg_idx >= n_batches - 1, t_total, burn_in + (seg_idx + 1) * t_batch)
        next_stat = np.where(in_obs, boundary, burn_in)
        cap = np.minimum(np.minimum(h_rem, next_stat - t), t_total - t)
        cap = np.maximum(cap, 0.0)
        fired = active & (tau < cap)
        delta = np.where(fired, tau, cap)
        delta = np.where(active, delta, 0.0)

        # Accumulate statistics on the post-burn-in segments.
        seg = active & in_obs & (delta > 0.0)
        if np.any(seg):
            d = delta[seg]
            xs = x[seg]
            ys = y[seg]
            txs = tx[seg]
            tys = ty[seg]
            xe = xs + txs * d
            ye = ys + tys * d
            xm = xs + 0.5 * txs * d
            ym = ys + 0.5 * tys * d
            f_seg = 0.5 * (
                (fval(xs) + 4.0 * fval(xm) + fval(xe)) + (fval(ys) + 4.0 * fval(ym) + fval(ye))
            ) * (d / 6.0)
            np.add.at(batch_int, (np.nonzero(seg)[0], seg_idx[seg]), f_seg)
            opp_time[seg] += np.where(txs * tys < 0, d, 0.0)
            dist_int[seg] += _abs_segment_integral(xs - ys, txs - tys, d)
            x_int[seg] += xm * d
            y_int[seg] += ym * d
            x2_int[seg] += (xs * xs + xs * xe + xe * xe) * (d / 3.0)
            y2_int[seg] += (ys * ys + ys * ye + ye * ye) * (d / 3.0)

        x = x + tx * delta
        y = y + ty * delta
        t = t + delta
        h_rem = h_rem - delta

        if np.any(fired):
            idx = np.nonzero(fired)[0]
            lam_x = rates.switching_rate(x[idx], tx[idx])
            lam_y = rates.switching_rate(y[idx], ty[idx])
            alpha = alpha_all(x, y, tx, ty, *_expand(lam_x, lam_y, idx, C))[idx]
            r_x = lam_x - alpha
            r_y = lam_y - alpha
            if np.min(np.concatenate([r_x, r_y, alpha])) < -_RATE_SLACK:
                raise AdmissibilityError("negative transition rate during simulation")
            total = lam_x + lam_y - alpha
            if np.any(total > bound[idx] * (1 + 1e-9)):
                raise RuntimeError("thinning bound too small")
            acc = u_accept[idx] * bound[idx] < total
            aidx = idx[acc]
            if aidx.size:
                pick = u_select[aidx] * total[acc]
                flip_x = pick < r_x[acc]
                flip_y = (~flip_x) & (pick < (r_x + r_y)[acc])
                flip_xy = ~(flip_x | flip_y)
                parity_before = tx[aidx] * ty[aidx]
                tx[aidx] = np.where(flip_x | flip_xy, -tx[aidx], tx[aidx])
                ty[aidx] = np.where(flip_y | flip_xy, -ty[aidx], ty[aidx])
                parity_after = tx[aidx] * ty[aidx]
                # Double flips preserve the velocity parity, single flips negate it.
                assert np.all(
                    np.where(flip_xy, parity_after == parity_before, parity_after == -parity_before)
                )
                h_rem[aidx] = 0.0
                if record_events:
                    kinds = np.where(flip_x, "x", np.where(flip_y, "y", "xy"))
                    for c, kind in zip(aidx, kinds):
                        events.append(
                            (float(t[c]), float(x[c]), float(y[c]), int(tx[c]), int(ty[c]), str(kind))
                        )

        active = t < t_total - 1e-12

    window = t_total - burn_in
    return (
        ZigzagSweepStats(
            batch_means=(batch_int / t_batch).reshape(n_var, R, n_batches),
            opposite_fraction=(opp_time / window).reshape(n_var, R),
            mean_abs_distance=(dist_int / window).reshape(n_var, R),
            mean_x=(x_int / window).reshape(n_var, R),
            var_x=(x2_int / window).reshape(n_var, R) - (x_int / window).reshape(n_var, R) ** 2,
            mean_y=(y_int / window).reshape(n_var, R),
            var_y=(y2_int / window).reshape(n_var, R) - (y_int / window).reshape(n_var, R) ** 2,
            t_batch=t_batch,
        ),
        events,
    )


def _expand(lam_x, lam_y, idx, size):
    lx = np.zeros(size)
    ly = np.zeros(size)
    lx[idx] = lam_x
    ly[idx] = lam_y
    return lx, ly


def simulate_coupled_zigzag(
    model: TargetModel1D,
    rates: RateSpec,
    coupling: ZigzagCoupling,
    t_total: float,
    burn_in: float,
    seed: int,
    observable: Observable,
    n_batches: int = 50,
    horizon: float = 0.5,
    record_events: bool = False,
) -> ZigzagStats:
    """Simulate one coupled zigzag pair and return time-weighted statistics.

    ``asym_var`` estimates 2 sigma_F^2 by continuous-time batch means over
    the post-burn-in window.
    """
    sweep, events = run_zigzag_sweep(
        model,
        rates,
        [coupling],
        observable,
        1,
        t_total,
        burn_in,
        seed,
        n_batches=n_batches,
        horizon=horizon,
        record_events=record_events,
    )
    from .estimators import pooled_variance_report

    report = pooled_variance_report(sweep.batch_means[0], sweep.t_batch)
    counts = {"x": 0, "y": 0, "xy": 0}
    if events:
        for ev in events:
            counts[ev[5]] += 1
    return ZigzagStats(
        mean_F=float(sweep.mean_F[0, 0]),
        asym_var=report.asym_var,
        ci_halfwidth=report.ci_halfwidth,
        opposite_fraction=float(sweep.opposite_fraction[0, 0]),
        mean_abs_distance=float(sweep.mean_abs_distance[0, 0]),
        mean_x=float(sweep.mean_x[0, 0]),
        var_x=float(sweep.var_x[0, 0]),
        mean_y=float(sweep.mean_y[0, 0]),
        var_y=float(sweep.var_y[0, 0]),
        t_observed=t_total - burn_in,
        n_events=counts,
        events=np.array(events, dtype=object) if record_events else None,
    )
