"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Two sub-criteria are provably unattainable as stated and are marked
xfail with the measured evidence; see notes in the repository README and
the assertions below.  Everything else must pass at the stated tolerances.
"""

import math

import numpy as np
import pytest
from scipy import stats

from coupledmc.coupling import (
    MatrixCouplingND,
    ScalarCoupling1D,
    WeightScheme,
    ZigzagCoupling,
    alpha_1d,
    assemble_block_G,
    mixing_matrix_1d,
    row_orthonormality_defect,
    zigzag_alpha,
)
from coupledmc.errors import AdmissibilityError
from coupledmc.estimators import (
    batch_means_variance,
    mean_ci,
    one_particle_sigma_quadrature,
    pooled_variance_report,
    replicate_sweep,
)
from coupledmc.langevin import (
    LangevinConfig,
    run_block_sweep,
    run_langevin,
    run_scalar_pair_sweep,
)
from coupledmc.models import (
    build_gaussian_model,
    build_gaussian_model_nd,
    linear_observable,
    mixed_observable,
    norm_sq_observable,
    quadratic_observable,
)
from coupledmc.ot import (
    assemble_cost,
    marginal_from_model,
    plan_cost_of_empirical,
    plan_mass_near_antidiagonal,
    sinkhorn_ladder,
)
from coupledmc.poisson import solve_poisson_overdamped_1d, solve_poisson_zigzag_1d
from coupledmc.spectral import (
    autocovariance,
    compute_spectrum,
    coupled_rate_mirror,
    empirical_decay_rate,
)
from coupledmc.variance import (
    delta_sigma_overdamped_1d,
    finite_difference_derivative_check,
    optimality_scan,
)
from coupledmc.zigzag import RateSpec, ZigzagState, coupled_event_rates, run_zigzag_sweep

QUARTER = math.pi / 4
BETA_GRID = [0.0, math.pi / 16, math.pi / 8, 3 * math.pi / 16, QUARTER]


def _report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:2d} [{name}]: {status} {detail}")


def _disjoint(lo_mean, lo_ci, hi_mean, hi_ci) -> bool:
    """True when the (mean +- ci) intervals do not overlap and lo < hi."""
    return lo_mean + lo_ci < hi_mean - hi_ci


# ---------------------------------------------------------------------------
# shared heavy fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def model():
    return build_gaussian_model(1.0, 8.0, 2001)


@pytest.fixture(scope="module")
def observables(model):
    return {
        "linear": linear_observable(model),
        "quadratic": quadratic_observable(model),
        "mixed": mixed_observable(model),
    }


@pytest.fixture(scope="module")
def solutions(model, observables):
    return {k: solve_poisson_overdamped_1d(model, o) for k, o in observables.items()}


@pytest.fixture(scope="module")
def fig3_sweeps(model, observables, solutions):
    """Variance-vs-strength sweeps for the three benchmark observables,
    20 replicates each on common random numbers."""
    panels = {}
    spec = {
        "linear": ["mirror", "poisson", "symmetric"],
        "quadratic": ["mirror", "poisson", "symmetric"],
        "mixed": ["poisson", "observable_grad", "mirror"],
    }
    for key, kinds in spec.items():
        rows, _ = replicate_sweep(
            model,
            observables[key],
            kinds,
            BETA_GRID,
            n_replicates=20,
            dt=0.02,
            t_total=2e4,
            burn_in=2e3,
            seed=71,
            n_batches=50,
            poisson=solutions[key],
        )
        panels[key] = {
            kind: [r for r in rows if r.kind == kind] for kind in kinds
        }
    return panels


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def test_criterion_01_poisson_exactness(model, observables):
    import time

    t0 = time.time()
    ps_lin = solve_poisson_overdamped_1d(model, observables["linear"])
    ps_quad = solve_poisson_overdamped_1d(model, observables["quadratic"])
    sel = np.abs(model.grid) <= 6.0
    err_lin = float(np.max(np.abs(ps_lin.phi[sel] - model.grid[sel])))
    err_quad = float(np.max(np.abs(ps_quad.phi[sel] - (model.grid[sel] ** 2 - 1) / 2)))
    elapsed = time.time() - t0
    ok = err_lin <= 1e-3 and err_quad <= 1e-3 and elapsed < 1.0
    _report(1, "poisson exactness", ok,
            f"err(f=x)={err_lin:.2e} err(f=x^2)={err_quad:.2e} runtime={elapsed:.2f}s")
    assert err_lin <= 1e-3
    assert err_quad <= 1e-3
    assert elapsed < 1.0


def test_criterion_02_one_particle_variance(model, observables, ou_long_run):
    s_lin = one_particle_sigma_quadrature(model, observables["linear"])
    s_quad = one_particle_sigma_quadrature(model, observables["quadratic"])
    rep = batch_means_variance(ou_long_run, 1e-2, 200)
    rel = abs(rep.asym_var - 2.0) / 2.0
    ok = abs(s_lin - 1.0) <= 1e-4 and abs(s_quad - 1.0) <= 1e-4 and rel <= 0.15
    _report(2, "one-particle variance", ok,
            f"sigma(f=x)={s_lin:.6f} sigma(f=x^2)={s_quad:.6f} batch-means={rep.asym_var:.3f}")
    assert abs(s_lin - 1.0) <= 1e-4
    assert abs(s_quad - 1.0) <= 1e-4
    assert rel <= 0.15


def test_criterion_03_independent_halving(model, observables):
    rows, _ = replicate_sweep(
        model, observables["linear"], ["independent"], [0.0],
        n_replicates=20, dt=0.02, t_total=2e4, burn_in=2e3, seed=72, n_batches=50,
    )
    est = rows[0].report.asym_var
    ok = abs(est - 1.0) <= 0.2
    _report(3, "independent halving", ok, f"2sigma_F^2={est:.3f} (target 1.0 +- 20%)")
    assert abs(est - 1.0) <= 0.2


def test_criterion_04_mirror_exact_antithesis(model, observables):
    cfg = LangevinConfig(
        model=model, n_particles=2, coupling=ScalarCoupling1D("mirror", QUARTER),
        dt=0.01, t_total=1000.0, burn_in=0.0, seed=73, x0=np.array([[1.7], [-1.7]]),
    )
    _, fseries = run_langevin(cfg, observables["linear"])
    ok = bool(np.all(fseries == 0.0))
    _report(4, "mirror exact antithesis", ok, f"max|F|={np.abs(fseries).max():.1e}")
    assert ok


def _values(rows):
    return np.array([r.report.asym_var for r in rows])


def test_criterion_05_figure3_orderings(fig3_sweeps):
    import time

    t0 = time.time()
    msgs = []
    ok = True

    # (a) linear observable
    panel = fig3_sweeps["linear"]
    for kind in ("mirror", "poisson"):
        vals = _values(panel[kind])
        mono = bool(np.all(np.diff(vals) < 0))
        lo, hi = panel[kind][-1].report, panel[kind][0].report
        dis = _disjoint(lo.asym_var, lo.ci_halfwidth, hi.asym_var, hi.ci_halfwidth)
        ok &= mono and dis
        msgs.append(f"a/{kind}: decreasing={mono} endpoints_disjoint={dis}")
    sym0, sym1 = panel["symmetric"][0].report, panel["symmetric"][-1].report
    overlap = abs(sym1.asym_var - sym0.asym_var) <= sym1.ci_halfwidth + sym0.ci_halfwidth
    ok &= overlap
    msgs.append(f"a/symmetric: endpoint_overlap={overlap}")

    # (b) quadratic observable
    panel = fig3_sweeps["quadratic"]
    for kind in ("symmetric", "poisson"):
        vals = _values(panel[kind])
        mono = bool(np.all(np.diff(vals) < 0))
        ok &= mono
        msgs.append(f"b/{kind}: decreasing={mono}")
    vals = _values(panel["mirror"])
    inc = bool(np.all(np.diff(vals) > 0))
    ok &= inc
    msgs.append(f"b/mirror: increasing={inc}")

    # (c) mixed observable
    panel = fig3_sweeps["mixed"]
    pois = panel["poisson"][-1].report
    obsg = panel["observable_grad"][-1].report
    minimal = pois.asym_var <= min(_values(panel["observable_grad"]).min(),
                                   _values(panel["mirror"]).min()) + 1e-12
    close = abs(obsg.asym_var - pois.asym_var) <= 0.2 * abs(pois.asym_var)
    ok &= minimal and close
    msgs.append(f"c: poisson_minimal={minimal} obs_grad_within_20%={close}")

    elapsed = time.time() - t0
    _report(5, "figure-3 orderings", ok, "; ".join(msgs) + f" (+{elapsed:.0f}s)")
    assert ok, msgs


def test_criterion_06_delta_sigma_closed_forms(model, observables, solutions):
    mirror = delta_sigma_overdamped_1d(
        model, solutions["linear"], ScalarCoupling1D("mirror", QUARTER)
    ).value
    pois = delta_sigma_overdamped_1d(
        model, solutions["quadratic"],
        ScalarCoupling1D("poisson", QUARTER, poisson=solutions["quadratic"]),
    ).value
    indep = delta_sigma_overdamped_1d(
        model, solutions["linear"], ScalarCoupling1D("independent", 0.5)
    ).value
    scan_ok = True
    try:
        optimality_scan(model, solutions["linear"],
                        ["independent", "synchronous", "mirror", "symmetric", "poisson"],
                        observables["linear"], expected_optimal=("poisson", "mirror"))
        optimality_scan(model, solutions["quadratic"],
                        ["independent", "synchronous", "mirror", "symmetric", "poisson"],
                        observables["quadratic"], expected_optimal=("poisson", "symmetric"))
        optimality_scan(model, solutions["mixed"],
                        ["independent", "mirror", "symmetric", "poisson", "observable_grad"],
                        observables["mixed"], expected_optimal=("poisson",))
    except AssertionError:
        scan_ok = False
    ok = (abs(mirror + 1.0) <= 1e-3 and abs(pois + 2 / math.pi) <= 1e-3
          and indep == 0.0 and scan_ok)
    _report(6, "delta-sigma closed forms", ok,
            f"mirror={mirror:.6f} poisson={pois:.6f} independent={indep} scans={scan_ok}")
    assert abs(mirror - (-1.0)) <= 1e-3
    assert abs(pois - (-2 / math.pi)) <= 1e-3
    assert indep == 0.0
    assert scan_ok


def test_criterion_07_derivative_consistency(model, observables, solutions):
    cases = [
        ("linear", "mirror"),
        ("quadratic", "symmetric"),
        ("mixed", "poisson"),
    ]
    ok = True
    msgs = []
    for obs_key, kind in cases:
        chk = finite_difference_derivative_check(
            model, observables[obs_key], kind, eps=0.2, n_replicates=20,
            dt=0.02, t_total=2e4, burn_in=2e3, seed=74, poisson=solutions[obs_key],
        )
        signs_agree = math.copysign(1, chk.slope) == math.copysign(1, chk.quadrature)
        strong = abs(chk.quadrature) >= 0.1
        ci_clear = (abs(chk.slope) > chk.slope_ci) if strong else True
        ok &= signs_agree and ci_clear
        msgs.append(
            f"{obs_key}/{kind}: slope={chk.slope:.3f}+-{chk.slope_ci:.3f} quad={chk.quadrature:.3f}"
        )
    _report(7, "derivative consistency", ok, "; ".join(msgs))
    assert ok, msgs


@pytest.fixture(scope="module")
def ot_setup(model, observables, solutions):
    mu = marginal_from_model(model, 201, 4.0)
    cost = assemble_cost(model, observables["linear"], solutions["linear"], mu.nodes, mu.nodes)
    return mu, cost


@pytest.mark.xfail(
    strict=False,
    reason=(
        "Provably unattainable as stated: at eps = 1e-2 * (max-min cost) the "
        "entropic plan between unit Gaussian marginals has correlation "
        "rho ~ -(1 - eps), giving sd(x+y) ~ sqrt(2 eps) ~ 0.54 and only ~29% "
        "of mass in |x+y| < 0.2 (measured 0.285; >= 0.9 needs eps <= ~0.0074). "
        "The solver does concentrate >= 90% at eps = 0.005 (see test_ot)."
    ),
)
def test_criterion_08a_plan_concentration_literal(ot_setup):
    mu, cost = ot_setup
    cost_range = float(cost.max() - cost.min())
    plan = sinkhorn_ladder(mu, mu, cost, epsilon=0.01 * cost_range)
    mass = plan_mass_near_antidiagonal(plan.plan, mu.nodes, mu.nodes, 0.2)
    _report(8, "OT concentration (literal eps)", mass >= 0.9,
            f"mass(|x+y|<0.2)={mass:.3f} at eps={plan.epsilon:.3f}")
    assert mass >= 0.9


def test_criterion_08b_lower_bound_comparison(model, observables, solutions, ot_setup):
    mu, cost = ot_setup
    cost_range = float(cost.max() - cost.min())
    plan = sinkhorn_ladder(mu, mu, cost, epsilon=0.01 * cost_range)

    kinds = ["independent", "mirror", "symmetric", "poisson"]
    couplings = [
        ScalarCoupling1D(k, QUARTER if k != "independent" else 0.0,
                         poisson=solutions["linear"] if k == "poisson" else None)
        for k in kinds
    ]
    sweep = run_scalar_pair_sweep(
        model, couplings, observables["linear"], 6, 0.01, 5000.0, 500.0, seed=75,
        collect_stride=10,
    )
    cost_fn = lambda xs, ys: 0.5 * xs * ys
    ok = True
    msgs = [f"sinkhorn={plan.cost_value:.4f} lower_bound={plan.lower_bound:.4f}"]
    empirical = {}
    for v, kind in enumerate(kinds):
        value, ci = plan_cost_of_empirical(sweep.samples[v].reshape(-1, 2), cost_fn)
        empirical[kind] = (value, ci)
        ok &= value >= plan.lower_bound - ci
        msgs.append(f"{kind}={value:.4f}+-{ci:.4f}")
    m_val, m_ci = empirical["mirror"]
    mirror_ok = (abs(m_val - (-0.5)) <= 4 * m_ci) and (plan.lower_bound - m_ci < m_val <= 0.0)
    ok &= mirror_ok
    _report(8, "OT lower-bound comparison", ok, "; ".join(msgs))
    assert mirror_ok
    assert ok, msgs


def test_criterion_09_zigzag(model, observables):
    import time

    t0 = time.time()
    rates = RateSpec(grad_potential=model.grad_potential, excess=0.1, lipschitz=1.0)
    betas = [0.0, 0.5, 1.0]
    couplings = [ZigzagCoupling("mirror_flip", b) for b in betas]
    sweep, _ = run_zigzag_sweep(
        model, rates, couplings, observables["linear"], 20, 5e4, 5e3, seed=76, n_batches=50,
    )
    ok = True
    msgs = []

    # marginal preservation at every beta
    for v, b in enumerate(betas):
        var = sweep.var_x[v]
        se = var.std(ddof=1) / math.sqrt(var.size)
        good = abs(var.mean() - 1.0) <= 4 * se
        ok &= good
        msgs.append(f"Var(x)@{b}={var.mean():.3f}+-{se:.3f}")

    reports = [pooled_variance_report(sweep.batch_means[v], sweep.t_batch) for v in range(3)]
    drop = _disjoint(reports[2].asym_var, reports[2].ci_halfwidth,
                     reports[0].asym_var, reports[0].ci_halfwidth)
    ok &= drop
    msgs.append(
        f"2sigma_F^2: {reports[0].asym_var:.3f}->{reports[2].asym_var:.3f} disjoint={drop}"
    )

    for label, arr in (("opposite", sweep.opposite_fraction), ("distance", sweep.mean_abs_distance)):
        means = arr.mean(axis=1)
        cis = np.array([stats.t.ppf(0.975, arr.shape[1] - 1) * a.std(ddof=1) / math.sqrt(arr.shape[1]) for a in arr])
        mono = bool(np.all(np.diff(means) > 0))
        dis = _disjoint(means[0], cis[0], means[2], cis[2])
        ok &= mono and dis
        msgs.append(f"{label}: {np.round(means, 3).tolist()} mono={mono} endpoints_disjoint={dis}")

    elapsed = time.time() - t0
    _report(9, "zigzag figure-5", ok, "; ".join(msgs) + f" (+{elapsed:.0f}s)")
    assert elapsed < 300
    assert ok, msgs


def test_criterion_10_sorting(model):
    import time

    t0 = time.time()
    nd_model = build_gaussian_model_nd(10)
    obs = norm_sq_observable(nd_model, scale=0.5)
    beta = QUARTER
    grad_phi = lambda pts: 0.5 * np.asarray(pts, dtype=float)
    source = MatrixCouplingND("reflection_poisson", beta, 10, grad_phi=grad_phi)
    variants = [
        (WeightScheme("pairwise_sorted", beta, 10), source),
        (WeightScheme("pairwise_fixed", beta, 10), source),
        (WeightScheme("pairwise_fixed", 0.0, 10), MatrixCouplingND("independent", 0.0, 10)),
    ]
    sweep = run_block_sweep(nd_model, variants, obs, 20, 0.02, 1500.0, 150.0, seed=77, n_batches=50)
    t_batch = (int(round(1350.0 / 0.02)) // 50) * 0.02
    sorted_rep, fixed_rep, indep_rep = (
        pooled_variance_report(sweep.batch_means[v], t_batch) for v in range(3)
    )
    dis = _disjoint(sorted_rep.asym_var, sorted_rep.ci_halfwidth,
                    fixed_rep.asym_var, fixed_rep.ci_halfwidth)
    below = (sorted_rep.asym_var <= indep_rep.asym_var
             and fixed_rep.asym_var <= indep_rep.asym_var)
    elapsed = time.time() - t0
    ok = dis and below and elapsed < 600
    _report(10, "sorted pairing", ok,
            f"sorted={sorted_rep.asym_var:.3f}+-{sorted_rep.ci_halfwidth:.3f} "
            f"fixed={fixed_rep.asym_var:.3f}+-{fixed_rep.ci_halfwidth:.3f} "
            f"independent={indep_rep.asym_var:.3f} (+{elapsed:.0f}s)")
    assert dis
    assert below
    assert elapsed < 600


def test_criterion_11a_spectral_rates(model):
    rep = compute_spectrum(model, 2001, 6)
    mirror_rate = coupled_rate_mirror(rep)
    ok = (
        abs(rep.eigenvalues[0] - 1.0) <= 1e-2
        and abs(rep.eigenvalues[1] - 2.0) <= 1e-2
        and rep.parities[0] == "odd"
        and abs(mirror_rate - 2.0) <= 1e-2
    )
    _report(11, "spectral rates", ok,
            f"mu1={rep.eigenvalues[0]:.4f} mu2={rep.eigenvalues[1]:.4f} "
            f"e1={rep.parities[0]} mirror_rate={mirror_rate:.4f}")
    assert ok


def _decay_rates(model, obs, kind, n_reps, seed):
    fits = []
    for r in range(n_reps):
        cfg = LangevinConfig(
            model=model, n_particles=2, coupling=ScalarCoupling1D(kind, QUARTER),
            dt=0.01, t_total=2500.0, burn_in=100.0, seed=seed + r,
        )
        _, fs = run_langevin(cfg, obs)
        fit = empirical_decay_rate(autocovariance(fs, 300), 0.01)
        fits.append(fit.rate)
    return mean_ci(np.array(fits))


@pytest.mark.xfail(
    strict=False,
    reason=(
        "Provably unattainable as stated: f = x^2 - 1 is an eigenfunction of "
        "the one-particle generator with eigenvalue 2, so the stationary "
        "F-autocovariance decays at rate 2 under BOTH mirror and independent "
        "coupling (measured 2.01+-0.16 vs 1.98+-0.15, overlapping). The "
        "quotient speed-up is real but needs an observable with an odd "
        "component; see test_criterion_11c for that demonstration."
    ),
)
def test_criterion_11b_empirical_decay_literal(model, observables):
    mirror, m_ci = _decay_rates(model, observables["quadratic"], "mirror", 10, 500)
    indep, i_ci = _decay_rates(model, observables["quadratic"], "independent", 10, 500)
    dis = _disjoint(indep, i_ci, mirror, m_ci)
    _report(11, "empirical decay (literal f=x^2-1)", dis,
            f"mirror={mirror:.3f}+-{m_ci:.3f} independent={indep:.3f}+-{i_ci:.3f}")
    assert dis


def test_criterion_11c_empirical_decay_mixed_parity(model, observables):
    # Same comparison with an observable that has an odd component: the
    # mirror quotient removes it, independent coupling keeps it.
    mirror, m_ci = _decay_rates(model, observables["mixed"], "mirror", 10, 600)
    indep, i_ci = _decay_rates(model, observables["mixed"], "independent", 10, 600)
    dis = _disjoint(indep, i_ci, mirror, m_ci)
    _report(11, "empirical decay (mixed-parity observable)", dis,
            f"mirror={mirror:.3f}+-{m_ci:.3f} independent={indep:.3f}+-{i_ci:.3f}")
    assert dis


def test_criterion_12_invariant_suites(model, observables, solutions):
    rng = np.random.default_rng(99)
    ok = True
    msgs = []

    # coupling admissibility probes
    xs, ys = rng.uniform(-8, 8, (2, 10_000))
    for kind in ("independent", "synchronous", "mirror", "symmetric", "poisson", "observable_grad"):
        c = ScalarCoupling1D(
            kind, QUARTER,
            poisson=solutions["mixed"] if kind == "poisson" else None,
            observable=observables["mixed"] if kind == "observable_grad" else None,
        )
        a = alpha_1d(c, xs, ys)
        ok &= bool(np.all(np.abs(a) <= 1.0 + 1e-15))
    msgs.append("alpha probes")

    # G G^T = Q and row orthonormality
    for alpha in rng.uniform(-1, 1, 200):
        G = mixing_matrix_1d(alpha)
        ok &= float(np.max(np.abs(G @ G.T - np.array([[1, alpha], [alpha, 1]])))) < 1e-12
    scheme = WeightScheme("pairwise_sorted", 0.6, 6)
    src = MatrixCouplingND("reflection_poisson", 0.6, 3,
                           grad_phi=lambda p: 0.5 * np.asarray(p, dtype=float))
    for _ in range(50):
        G = assemble_block_G(rng.standard_normal((6, 3)), scheme, src)
        ok &= row_orthonormality_defect(G, 6, 3) < 1e-12
    msgs.append("GG^T=Q + row orthonormality")

    # zigzag rate nonnegativity and the total-rate identity
    rates = RateSpec(grad_potential=model.grad_potential, excess=0.1, lipschitz=1.0)
    coup = ZigzagCoupling("mirror_flip", 1.0)
    for _ in range(2000):
        st = ZigzagState(
            x=float(rng.uniform(-6, 6)), y=float(rng.uniform(-6, 6)),
            theta_x=int(rng.choice([-1, 1])), theta_y=int(rng.choice([-1, 1])),
        )
        rx, ry, rxy = coupled_event_rates(st, rates, coup)
        lam_x = float(rates.switching_rate(st.x, st.theta_x))
        lam_y = float(rates.switching_rate(st.y, st.theta_y))
        a = zigzag_alpha(coup, st.x, st.y, st.theta_x, st.theta_y, lam_x, lam_y)
        ok &= min(rx, ry, rxy) >= 0
        ok &= abs((rx + ry + rxy) - (lam_x + lam_y - a)) <= 1e-12 * (1 + lam_x + lam_y)
    msgs.append("zigzag rates")

    # batch-means white-noise calibration
    stream = np.random.Generator(np.random.Philox(np.random.SeedSequence(1)))
    rep = batch_means_variance(stream.standard_normal(100_000), 1.0, 50)
    ok &= abs(rep.asym_var - 1.0) < 0.2
    msgs.append(f"white-noise calib={rep.asym_var:.3f}")

    _report(12, "invariant suites", ok, "; ".join(msgs))
    assert ok, msgs
