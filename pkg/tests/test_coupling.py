import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledmc.coupling import (
    MatrixCouplingND,
    ScalarCoupling1D,
    WeightScheme,
    ZigzagCoupling,
    alpha_1d,
    assemble_block_G,
    mixing_matrix_1d,
    pair_indices,
    reflection_matrix,
    row_orthonormality_defect,
    zigzag_alpha,
)
from coupledmc.errors import AdmissibilityError, ConfigurationError

QUARTER = math.pi / 4


def test_mirror_alpha_is_minus_one():
    c = ScalarCoupling1D("mirror", QUARTER)
    assert alpha_1d(c, 0.3, -2.0) == pytest.approx(-1.0)


def test_independent_alpha_is_zero():
    c = ScalarCoupling1D("independent", 0.3)
    assert alpha_1d(c, 1.0, 1.0) == 0.0


def test_symmetric_alpha_opposite_sides():
    c = ScalarCoupling1D("symmetric", QUARTER)
    assert alpha_1d(c, 1.0, -1.0) == pytest.approx(1.0)
    assert alpha_1d(c, 1.0, 2.0) == pytest.approx(-1.0)


def test_poisson_alpha_uses_sign_of_dphi(gaussian_model, ps_quadratic):
    c = ScalarCoupling1D("poisson", QUARTER, poisson=ps_quadratic)
    # phi' = x: same side -> mirror-like (-1); opposite sides -> +1
    assert alpha_1d(c, 1.0, 2.0) == pytest.approx(-1.0)
    assert alpha_1d(c, 1.0, -2.0) == pytest.approx(1.0)


def test_observable_grad_alpha(gaussian_model, f_mixed):
    c = ScalarCoupling1D("observable_grad", QUARTER, observable=f_mixed)
    # f' = 2x - 1: both gradients positive at x=1,y=2 -> -1
    assert alpha_1d(c, 1.0, 2.0) == pytest.approx(-1.0)


def test_beta_scales_alpha():
    beta = 0.2
    c = ScalarCoupling1D("synchronous", beta)
    assert alpha_1d(c, 0.0, 0.0) == pytest.approx(math.sin(2 * beta))


def test_mixing_matrix_identity_at_zero():
    G = mixing_matrix_1d(0.0)
    assert np.allclose(G, np.eye(2))


@pytest.mark.parametrize("alpha", [1.0, -1.0, 0.5, -0.37, 0.0])
def test_mixing_matrix_factorises_Q(alpha):
    G = mixing_matrix_1d(alpha)
    Q = np.array([[1.0, alpha], [alpha, 1.0]])
    assert np.max(np.abs(G @ G.T - Q)) < 1e-12
    assert np.allclose(np.sum(G * G, axis=1), 1.0, atol=1e-12)


def test_mixing_matrix_rejects_inadmissible():
    with pytest.raises(AdmissibilityError):
        mixing_matrix_1d(1.0 + 1e-9)


def test_reflection_along_e1():
    e1 = np.array([1.0, 0.0, 0.0])
    M = reflection_matrix(e1, e1)
    assert M[0, 0] == pytest.approx(-1.0)
    assert np.allclose(np.diag(M)[1:], 1.0)
    assert e1 @ (M @ e1) == pytest.approx(-1.0)


def test_reflection_antipodal_fallback():
    e1 = np.array([1.0, 0.0])
    assert np.allclose(reflection_matrix(e1, -e1), np.eye(2))


def test_reflection_zero_fallback():
    assert np.allclose(reflection_matrix(np.zeros(3), np.array([0.0, 1.0, 0.0])), np.eye(3))


def test_reflection_rejects_nonfinite():
    with pytest.raises(AdmissibilityError):
        reflection_matrix(np.array([np.nan, 0.0]), np.array([1.0, 0.0]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_reflection_antithetic_value(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    u = rng.standard_normal(d)
    v = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    M = reflection_matrix(u, v)
    assert np.max(np.abs(M @ M.T - np.eye(d))) < 1e-10
    if np.linalg.norm(u + v) >= 1e-8:
        assert v @ (M @ u) == pytest.approx(-1.0, abs=1e-10)


def test_assemble_identity_at_zero_strength():
    scheme = WeightScheme("pairwise_fixed", 0.0, 4)
    src = MatrixCouplingND("independent", 0.0, 3)
    pos = np.random.default_rng(0).standard_normal((4, 3))
    assert np.allclose(assemble_block_G(pos, scheme, src), np.eye(12))


def test_assemble_matches_pair_mixing(gaussian_model, ps_linear):
    # n=2, d=1 with a mirror-like reflection source equals the 2x2 matrix.
    scheme = WeightScheme("pairwise_fixed", QUARTER, 2)
    src = MatrixCouplingND(
        "reflection_poisson", QUARTER, 1, grad_phi=lambda p: np.ones_like(np.asarray(p, dtype=float))
    )
    G = assemble_block_G(np.array([[0.5], [1.5]]), scheme, src)
    assert np.max(np.abs(G - mixing_matrix_1d(-1.0))) < 1e-12


def test_sorted_pairing_matches_bruteforce():
    scheme = WeightScheme("pairwise_sorted", 0.3, 4)
    pairs = pair_indices(np.array([3.0, 1.0, 4.0, 2.0]), scheme)
    assert pairs == [(2, 0), (3, 1)]


def test_sorted_pairing_ties_by_index():
    scheme = WeightScheme("pairwise_sorted", 0.3, 4)
    pairs = pair_indices(np.array([2.0, 2.0, 2.0, 2.0]), scheme)
    assert pairs == [(0, 1), (2, 3)]


def test_odd_particle_count_rejected():
    with pytest.raises(ConfigurationError):
        WeightScheme("pairwise_fixed", 0.1, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_row_orthonormality_random_states(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.choice([2, 4, 6]))
    d = int(rng.integers(1, 5))
    beta = float(rng.uniform(0, QUARTER))
    kind = str(rng.choice(["pairwise_fixed", "pairwise_sorted"]))
    scheme = WeightScheme(kind, beta, n)
    src = MatrixCouplingND(
        "reflection_poisson", beta, d, grad_phi=lambda p: 0.5 * np.asarray(p, dtype=float)
    )
    pos = rng.standard_normal((n, d))
    G = assemble_block_G(pos, scheme, src)
    assert row_orthonormality_defect(G, n, d) < 1e-12
    # G G^T must have unit diagonal blocks and contractive off-diagonals
    Q = G @ G.T
    for i in range(n):
        blk = Q[i * d : (i + 1) * d, i * d : (i + 1) * d]
        assert np.max(np.abs(blk - np.eye(d))) < 1e-12


def test_matrix_alpha_loewner_constraint():
    rng = np.random.default_rng(5)
    src = MatrixCouplingND(
        "reflection_poisson", 0.31, 4, grad_phi=lambda p: np.asarray(p, dtype=float)
    )
    for _ in range(200):
        x, y = rng.standard_normal((2, 4))
        a = src.alpha(x, y)
        eigs = np.linalg.eigvalsh(a.T @ a)
        assert eigs.max() <= 1.0 + 1e-10


def test_scalar_alpha_admissible_probes(gaussian_model, ps_mixed, f_mixed):
    rng = np.random.default_rng(7)
    xs = rng.uniform(-8, 8, 10_000)
    ys = rng.uniform(-8, 8, 10_000)
    for kind in ("independent", "synchronous", "mirror", "symmetric", "poisson", "observable_grad"):
        c = ScalarCoupling1D(
            kind,
            QUARTER,
            poisson=ps_mixed if kind == "poisson" else None,
            observable=f_mixed if kind == "observable_grad" else None,
        )
        a = alpha_1d(c, xs, ys)
        assert np.all(np.abs(a) <= 1.0 + 1e-15)


def test_zigzag_alpha_examples():
    c = ZigzagCoupling("mirror_flip", 1.0)
    assert zigzag_alpha(c, 0.0, 0.0, 1, -1, 2.0, 3.0) == pytest.approx(2.0)
    assert zigzag_alpha(c, 0.0, 0.0, 1, 1, 2.0, 3.0) == 0.0
    ind = ZigzagCoupling("independent", 1.0)
    assert zigzag_alpha(ind, 1.0, 2.0, 1, -1, 2.0, 3.0) == 0.0


def test_zigzag_alpha_bound_probes(gaussian_model, ps_quadratic):
    rng = np.random.default_rng(11)
    n = 10_000
    xs, ys = rng.uniform(-6, 6, (2, n))
    thetas = rng.choice([-1.0, 1.0], (2, n))
    lams = rng.uniform(0, 5, (2, n))
    for kind in ("independent", "mirror_flip", "symmetric_flip", "poisson_flip"):
        c = ZigzagCoupling(kind, 0.7, poisson=ps_quadratic if kind == "poisson_flip" else None)
        a = zigzag_alpha(c, xs, ys, thetas[0], thetas[1], lams[0], lams[1])
        assert np.all(a >= 0.0)
        assert np.all(a <= np.minimum(lams[0], lams[1]) + 1e-15)


def test_zigzag_alpha_rejects_negative_rates():
    c = ZigzagCoupling("mirror_flip", 1.0)
    with pytest.raises(AdmissibilityError):
        zigzag_alpha(c, 0.0, 0.0, 1, -1, -0.5, 1.0)


def test_beta_out_of_range_rejected():
    with pytest.raises(ConfigurationError):
        ScalarCoupling1D("mirror", 1.0)
    with pytest.raises(ConfigurationError):
        ZigzagCoupling("mirror_flip", 1.5)
