"""Experiment orchestration and machine-readable output.

Every subcommand reads an optional flat key-value config file, applies
command-line overrides, runs, and writes CSV/JSON files into --out-dir.
Output files start with ``#``-prefixed metadata lines (artifact version,
config hash, seed) and contain no timestamps, so identical config and seed
produce byte-identical files.

Exit codes: 0 success, 2 configuration errors, 3 simulation divergence,
4 assertion or admissibility failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .coupling import ScalarCoupling1D, MatrixCouplingND, WeightScheme, ZigzagCoupling
from .errors import AdmissibilityError, ConfigurationError, DivergenceError
from .estimators import batch_means_variance, pooled_variance_report, replicate_sweep
from .langevin import LangevinConfig, run_block_sweep, run_langevin, run_scalar_pair_sweep
from .models import TargetModelND
from .ot import (
    assemble_cost,
    marginal_from_model,
    plan_cost_of_empirical,
    plan_mass_near_antidiagonal,
    plan_mass_near_diagonal,
    sinkhorn_ladder,
)
from .poisson import solve_poisson_overdamped_1d, solve_poisson_zigzag_1d
from .spectral import compute_spectrum, coupled_rate_mirror
from .variance import delta_sigma_overdamped_1d, delta_sigma_zigzag
from .zigzag import RateSpec, run_zigzag_sweep

__all__ = ["main", "run_experiment"]


def _write_csv(path: Path, cfg: ExperimentConfig, seed: int, header: Sequence[str], rows):
    lines = [
        f"# coupledmc {__version__}",
        f"# experiment={cfg.experiment} config_hash={cfg.config_hash()} seed={seed}",
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _pair_couplings(cfg: ExperimentConfig, kind: str, beta: float, model, observable):
    poisson = None
    if kind in ("poisson",):
        poisson = solve_poisson_overdamped_1d(model, observable)
    return ScalarCoupling1D(
        kind=kind,
        strength_beta=beta,
        poisson=poisson,
        observable=observable if kind == "observable_grad" else None,
    )


def _seed(cfg: ExperimentConfig) -> int:
    return cfg.get_int("run.seed", 0)


def run_experiment(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Execute one experiment; returns the list of files written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = _RUNNERS[cfg.experiment]
    return runner(cfg, out_dir)


# -- individual experiments -------------------------------------------------


def _run_poisson(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    obs = cfg.build_observable(model)
    variant = cfg.get("poisson.variant", "overdamped")
    solve = solve_poisson_overdamped_1d if variant == "overdamped" else solve_poisson_zigzag_1d
    ps = solve(model, obs)
    rows = zip(ps.grid, ps.phi, ps.dphi, ps.residual)
    path = _write_csv(
        out / f"{cfg.get('output.prefix', 'poisson')}.csv",
        cfg,
        _seed(cfg),
        ["x", "phi", "dphi", "residual"],
        rows,
    )
    return [path]


def _run_langevin(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    obs = cfg.build_observable(model)
    n = cfg.get_int("run.particles", 2)
    kind = cfg.get("coupling.kind", "independent")
    coupling = None
    if n == 2 and not isinstance(model, TargetModelND):
        coupling = _pair_couplings(cfg, kind, cfg.get_float("coupling.beta", 0.0), model, obs)
    config = LangevinConfig(
        model=model,
        n_particles=n,
        coupling=coupling,
        dt=cfg.get_positive("run.dt", 0.01),
        t_total=cfg.get_positive("run.t_total", 1000.0),
        burn_in=cfg.get_float("run.burn_in", cfg.get_positive("run.t_total", 1000.0) * 0.1),
        seed=_seed(cfg),
        dynamics=cfg.get("run.dynamics", "overdamped"),
        gamma=cfg.get_float("run.gamma", 1.0),
        mass=cfg.get_float("run.mass", 1.0),
        thin_stride=cfg.get_int("run.thin_stride", 100),
    )
    traj, fseries = run_langevin(config, obs)
    report = batch_means_variance(fseries, config.dt, cfg.get_int("run.batches", 50))
    prefix = cfg.get("output.prefix", "langevin")
    paths = [
        _write_csv(
            out / f"{prefix}_summary.csv",
            cfg,
            _seed(cfg),
            ["mean", "asym_var", "ci", "n_batches", "replicates"],
            [[report.mean, report.asym_var, report.ci_halfwidth, report.n_batches, 1]],
        )
    ]
    if cfg.get("output.trajectory", "no") == "yes":
        rows = []
        for k, t in enumerate(traj.times):
            for i in range(traj.positions.shape[1]):
                coords = traj.positions[k, i]
                rows.append([t, i] + [float(c) for c in np.atleast_1d(coords)])
        dim = traj.positions.shape[2] if traj.positions.ndim == 3 else 1
        header = ["t", "particle"] + [f"x{j}" for j in range(dim)]
        paths.append(_write_csv(out / f"{prefix}_trajectory.csv", cfg, _seed(cfg), header, rows))
    return paths


def _run_variance_sweep(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    obs = cfg.build_observable(model)
    kinds = cfg.get_list("coupling.kinds", "independent,mirror,symmetric,poisson")
    betas = cfg.get_float_list("coupling.beta_grid", "0,0.19634954,0.39269908,0.58904862,0.78539816")
    rows_out, _ = replicate_sweep(
        model,
        obs,
        kinds,
        betas,
        n_replicates=cfg.get_int("run.replicates", 20),
        dt=cfg.get_positive("run.dt", 0.02),
        t_total=cfg.get_positive("run.t_total", 20000.0),
        burn_in=cfg.get_float("run.burn_in", 2000.0),
        seed=_seed(cfg),
        n_batches=cfg.get_int("run.batches", 50),
    )
    rows = [
        [r.beta, r.kind, r.report.mean, r.report.asym_var, r.report.ci_halfwidth,
         r.report.n_batches, r.report.replicate_count]
        for r in rows_out
    ]
    path = _write_csv(
        out / f"{cfg.get('output.prefix', 'variance_sweep')}.csv",
        cfg,
        _seed(cfg),
        ["beta", "kind", "mean", "asym_var", "ci", "n_batches", "replicates"],
        rows,
    )
    return [path]


def _run_sort_compare(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    if not isinstance(model, TargetModelND):
        raise ConfigurationError("sort-compare needs model.kind = gaussian_nd")
    obs = cfg.build_observable(model)
    beta = cfg.get_float("coupling.beta", math.pi / 4)
    n = cfg.get_int("run.particles", 10)
    scale = cfg.get_float("observable.scale", 0.5)
    grad_phi = lambda pts: scale * np.asarray(pts, dtype=float)
    source = MatrixCouplingND("reflection_poisson", beta, model.dim, grad_phi=grad_phi)
    independent = MatrixCouplingND("independent", 0.0, model.dim)
    variants = [
        (WeightScheme("pairwise_sorted", beta, n), source),
        (WeightScheme("pairwise_fixed", beta, n), source),
        (WeightScheme("pairwise_fixed", 0.0, n), independent),
    ]
    labels = ["pairwise_sorted", "pairwise_fixed", "independent"]
    sweep = run_block_sweep(
        model,
        variants,
        obs,
        n_replicates=cfg.get_int("run.replicates", 20),
        dt=cfg.get_positive("run.dt", 0.02),
        t_total=cfg.get_positive("run.t_total", 1000.0),
        burn_in=cfg.get_float("run.burn_in", 100.0),
        seed=_seed(cfg),
        n_batches=cfg.get_int("run.batches", 50),
    )
    record = int(round((cfg.get_positive("run.t_total", 1000.0) - cfg.get_float("run.burn_in", 100.0)) / cfg.get_positive("run.dt", 0.02)))
    t_batch = (record // cfg.get_int("run.batches", 50)) * cfg.get_positive("run.dt", 0.02)
    rows = []
    for v, label in enumerate(labels):
        rep = pooled_variance_report(sweep.batch_means[v], t_batch)
        rows.append([beta, label, rep.mean, rep.asym_var, rep.ci_halfwidth, rep.n_batches, rep.replicate_count])
    path = _write_csv(
        out / f"{cfg.get('output.prefix', 'sort_compare')}.csv",
        cfg,
        _seed(cfg),
        ["beta", "scheme", "mean", "asym_var", "ci", "n_batches", "replicates"],
        rows,
    )
    return [path]


def _run_zigzag(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    obs = cfg.build_observable(model)
    rates = RateSpec(
        grad_potential=model.grad_potential,
        excess=cfg.get_float("run.gamma", 0.1),
        lipschitz=cfg.get_float("run.lipschitz", 2.0 if cfg.get("model.kind") == "cauchy" else 1.0),
    )
    kind = cfg.get("coupling.kind", "mirror_flip")
    betas = cfg.get_float_list("coupling.beta_grid", "0,0.25,0.5,0.75,1")
    poisson = solve_poisson_zigzag_1d(model, obs) if kind == "poisson_flip" else None
    couplings = [ZigzagCoupling(kind if b > 0 else "independent", b, poisson=poisson) for b in betas]
    record_events = cfg.get("output.events", "no") == "yes"
    sweep, events = run_zigzag_sweep(
        model,
        rates,
        couplings,
        obs,
        n_replicates=cfg.get_int("run.replicates", 20),
        t_total=cfg.get_positive("run.t_total", 50000.0),
        burn_in=cfg.get_float("run.burn_in", 5000.0),
        seed=_seed(cfg),
        n_batches=cfg.get_int("run.batches", 50),
        record_events=record_events,
    )
    rows = []
    for v, b in enumerate(betas):
        rep = pooled_variance_report(sweep.batch_means[v], sweep.t_batch)
        rows.append(
            [
                b,
                kind,
                rep.mean,
                rep.asym_var,
                rep.ci_halfwidth,
                float(sweep.opposite_fraction[v].mean()),
                float(sweep.mean_abs_distance[v].mean()),
                float(sweep.var_x[v].mean()),
                rep.n_batches,
                rep.replicate_count,
            ]
        )
    prefix = cfg.get("output.prefix", "zigzag")
    paths = [
        _write_csv(
            out / f"{prefix}_stats.csv",
            cfg,
            _seed(cfg),
            ["beta", "kind", "mean", "asym_var", "ci", "opposite_fraction",
             "mean_distance", "var_x", "n_batches", "replicates"],
            rows,
        )
    ]
    if record_events and events:
        paths.append(
            _write_csv(
                out / f"{prefix}_events.csv",
                cfg,
                _seed(cfg),
                ["t", "x", "y", "theta_x", "theta_y", "event_type"],
                events,
            )
        )
    return paths


def _run_delta_sigma(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    obs = cfg.build_observable(model)
    ps = solve_poisson_overdamped_1d(model, obs)
    beta = cfg.get_float("coupling.beta", math.pi / 4)
    mc = cfg.get_int("run.mc_samples", 0)
    rows = []
    for kind in cfg.get_list("coupling.kinds", "independent,synchronous,mirror,symmetric,poisson,observable_grad"):
        coup = ScalarCoupling1D(
            kind=kind,
            strength_beta=beta,
            poisson=ps if kind == "poisson" else None,
            observable=obs if kind == "observable_grad" else None,
        )
        rep = delta_sigma_overdamped_1d(model, ps, coup, mc_samples=mc, seed=_seed(cfg))
        rows.append([kind, beta, rep.value, rep.mc_value if mc else "", rep.mc_ci if mc else ""])
    zz_kinds = cfg.get_list("coupling.zigzag_kinds", "")
    if zz_kinds:
        rates = RateSpec(grad_potential=model.grad_potential, excess=cfg.get_float("run.gamma", 0.1),
                         lipschitz=cfg.get_float("run.lipschitz", 1.0))
        pst = solve_poisson_zigzag_1d(model, obs)
        for kind in zz_kinds:
            coup = ZigzagCoupling(kind, cfg.get_float("coupling.zigzag_beta", 1.0),
                                  poisson=pst if kind == "poisson_flip" else None)
            rep = delta_sigma_zigzag(model, pst, coup, rates)
            rows.append([kind, coup.strength_beta, rep.value, "", ""])
    path = _write_csv(
        out / f"{cfg.get('output.prefix', 'delta_sigma')}.csv",
        cfg,
        _seed(cfg),
        ["kind", "beta", "value", "mc_value", "mc_ci"],
        rows,
    )
    return [path]


def _run_ot_compare(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    obs = cfg.build_observable(model)
    ps = solve_poisson_overdamped_1d(model, obs)
    n_nodes = cfg.get_int("ot.nodes", 201)
    halfwidth = cfg.get_float("ot.halfwidth", 4.0)
    mu = marginal_from_model(model, n_nodes, halfwidth)
    cost = assemble_cost(model, obs, ps, mu.nodes, mu.nodes)
    cost_range = float(cost.max() - cost.min())
    epsilon = cfg.get_float("ot.epsilon", 0.01 * cost_range)
    plan = sinkhorn_ladder(mu, mu, cost, epsilon, tol=cfg.get_float("ot.tol", 1e-9))

    seed = _seed(cfg)
    prefix = cfg.get("output.prefix", "ot_compare")
    paths = []
    plan_rows = [[mu.nodes[i]] + list(plan.plan[i]) for i in range(len(mu.nodes))]
    paths.append(
        _write_csv(
            out / f"{prefix}_plan.csv",
            cfg,
            seed,
            ["x"] + [_fmt(float(v)) for v in mu.nodes],
            plan_rows,
        )
    )

    empirical = {}
    kinds = cfg.get_list("coupling.kinds", "independent,mirror,symmetric,poisson")
    beta = cfg.get_float("coupling.beta", math.pi / 4)
    couplings = [
        ScalarCoupling1D(kind=k, strength_beta=beta if k != "independent" else 0.0,
                         poisson=ps if k == "poisson" else None,
                         observable=obs if k == "observable_grad" else None)
        for k in kinds
    ]
    sweep = run_scalar_pair_sweep(
        model,
        couplings,
        obs,
        n_replicates=cfg.get_int("run.replicates", 4),
        dt=cfg.get_positive("run.dt", 0.01),
        t_total=cfg.get_positive("run.t_total", 5000.0),
        burn_in=cfg.get_float("run.burn_in", 500.0),
        seed=seed,
        n_batches=cfg.get_int("run.batches", 20),
        collect_stride=cfg.get_int("ot.collect_stride", 20),
    )
    f0 = lambda z: np.asarray(obs.value(z), dtype=float) - obs.mean_under_target
    cost_fn = lambda xs, ys: 0.25 * (f0(xs) * ps.phi_at(ys) + ps.phi_at(xs) * f0(ys))
    hist_paths = []
    edges = np.linspace(-halfwidth, halfwidth, cfg.get_int("ot.hist_bins", 81) + 1)
    for v, kind in enumerate(kinds):
        pairs = sweep.samples[v].reshape(-1, 2)
        value, ci = plan_cost_of_empirical(pairs, cost_fn)
        hist, _, _ = np.histogram2d(pairs[:, 0], pairs[:, 1], bins=[edges, edges], density=False)
        hist = hist / hist.sum()
        centers = 0.5 * (edges[:-1] + edges[1:])
        hist_rows = [[centers[i]] + list(hist[i]) for i in range(len(centers))]
        hist_paths.append(
            _write_csv(
                out / f"{prefix}_empirical_{kind}.csv",
                cfg,
                seed,
                ["x"] + [_fmt(float(c)) for c in centers],
                hist_rows,
            )
        )
        empirical[kind] = {"cost": value, "ci": ci}
    summary = {
        "cost_value": plan.cost_value,
        "lower_bound": plan.lower_bound,
        "marginal_error": plan.marginal_error,
        "epsilon": plan.epsilon,
        "converged": plan.converged,
        "cost_range": cost_range,
        "mass_near_antidiagonal_band_0.2": plan_mass_near_antidiagonal(plan.plan, mu.nodes, mu.nodes, 0.2),
        "mass_near_diagonal_band_0.2": plan_mass_near_diagonal(plan.plan, mu.nodes, mu.nodes, 0.2),
        "empirical_values": empirical,
        "config_hash": cfg.config_hash(),
        "seed": seed,
    }
    summary_path = out / f"{prefix}_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths + hist_paths + [summary_path]


def _run_spectral(cfg: ExperimentConfig, out: Path) -> list[Path]:
    model = cfg.build_model()
    report = compute_spectrum(model, cfg.get_int("model.grid", 2001), cfg.get_int("spectral.modes", 6))
    try:
        mirror = coupled_rate_mirror(report)
    except ConfigurationError:
        mirror = float("nan")
    rows = [
        [k + 1, float(mu), parity, report.one_particle_rate, mirror]
        for k, (mu, parity) in enumerate(zip(report.eigenvalues, report.parities))
    ]
    path = _write_csv(
        out / f"{cfg.get('output.prefix', 'spectral')}.csv",
        cfg,
        _seed(cfg),
        ["index", "eigenvalue", "parity", "one_particle_rate", "mirror_coupled_rate"],
        rows,
    )
    return [path]


_RUNNERS = {
    "poisson": _run_poisson,
    "langevin": _run_langevin,
    "variance-sweep": _run_variance_sweep,
    "sort-compare": _run_sort_compare,
    "zigzag": _run_zigzag,
    "delta-sigma": _run_delta_sigma,
    "ot-compare": _run_ot_compare,
    "spectral": _run_spectral,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupledmc",
        description="Coupled MCMC samplers: simulation, variance objectives and diagnostics.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="flat key-value config file")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument("--workers", type=int, default=1,
                       help="worker count (accepted for interface compatibility; "
                            "replicates are vectorised in-process)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = value.strip()
        if args.seed is not None:
            overrides["run.seed"] = str(args.seed)
        if args.workers is not None:
            overrides["run.workers"] = str(args.workers)
        cfg = load_config(args.config, experiment=args.experiment, overrides=overrides)
        paths = run_experiment(cfg, Path(args.out_dir))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"simulation divergence: {exc}", file=sys.stderr)
        return 3
    except (AdmissibilityError, AssertionError, RuntimeError) as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 4
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
