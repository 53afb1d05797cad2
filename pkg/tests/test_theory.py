import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zapcs.errors import K0TooSmall, KMinTooSmall, MuOutOfRange, NotMinimizer, TooLarge, ZeroColumn
from zapcs.linalg import build_projection
from zapcs.oracle import g_value, l1_min_solution
from zapcs.signals import derive_seed, gen_gaussian_matrix, make_problem
from zapcs.theory import (
    BoundSequence,
    EXACT,
    MONTE_CARLO,
    SAMPLED,
    TheoryConstants,
    bound_sequence,
    check_conditions,
    coherence,
    compressible_deviation_bound,
    constants,
    estimate_t,
    extend_bound,
    instance_constants,
    invariant_radius,
    max_psgn_norm_sq,
    ray_minimum,
    rip_constant,
    sample_solution_space,
    steps_between_balls,
    steps_to_neighborhood,
)

# t for A = [1 2], x* = (0, 1): along +u = (2, -1)/sqrt5 the l1 excess is r/sqrt5
T_ONE_BY_TWO = 0.4472135954999579


def unique_instance(M, N, S, master, start=0):
    k = start
    while True:
        prob = make_problem(M, N, S, derive_seed(master, k))
        sol = l1_min_solution(prob.A, prob.y)
        if sol.unique:
            return prob, sol.x
        k += 1


def grid_t(A, x_star, M0, n_angles=20_000, n_radii=4000):
    """Independent oracle: brute-force grid over kernel angles and radii."""
    Q = build_projection(A).kernel_basis
    th = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
    U = np.cos(th)[:, None] * Q[:, 0] + np.sin(th)[:, None] * Q[:, 1]
    best = math.inf
    base = np.abs(x_star).sum()
    radii = np.concatenate([[1e-9], np.linspace(M0 / n_radii, M0, n_radii)])
    for u in U[:: max(1, n_angles // 2000)]:
        X = x_star + radii[:, None] * u
        best = min(best, float(((np.abs(X).sum(axis=1) - base) / radii).min()))
    # the limiting value on every direction of the fine angular grid
    on = x_star != 0
    lim = (U[:, on] * np.sign(x_star[on])).sum(axis=1) + np.abs(U[:, ~on]).sum(axis=1)
    return min(best, float(lim.min()))


# -- matrix conditions ---------------------------------------------------------


def test_rip_examples():
    Q = np.linalg.qr(np.random.default_rng(0).standard_normal((5, 5)))[0]
    assert rip_constant(Q, 3) == pytest.approx(0.0, abs=1e-12)
    theta = 1.1
    A = np.array([[1.0, math.cos(theta)], [0.0, math.sin(theta)]])
    assert rip_constant(A, 2) == pytest.approx(abs(math.cos(theta)), abs=1e-12)
    B = gen_gaussian_matrix(4, 9, 1)
    B = B / np.linalg.norm(B, axis=0)
    assert rip_constant(B, 1) == pytest.approx(0.0, abs=1e-12)


def test_rip_matches_all_subset_sizes():
    A = gen_gaussian_matrix(5, 8, 2)
    S = 3
    brute = 0.0
    for k in range(1, S + 1):
        for T in itertools.combinations(range(8), k):
            ev = np.linalg.eigvalsh(A[:, T].T @ A[:, T])
            brute = max(brute, ev[-1] - 1, 1 - ev[0])
    assert rip_constant(A, S) == pytest.approx(brute, rel=1e-12)


def test_rip_guard():
    with pytest.raises(TooLarge):
        rip_constant(gen_gaussian_matrix(10, 60, 0), 10)


def test_coherence_examples():
    assert coherence(np.eye(3)) == 0.0
    assert coherence(np.array([[1.0, 1.0], [2.0, 2.0]])) == pytest.approx(1.0)
    with pytest.raises(ZeroColumn):
        coherence(np.array([[1.0, 0.0], [1.0, 0.0]]))
    A = gen_gaussian_matrix(20, 50, 3)
    best = 0.0
    for i in range(50):
        for j in range(50):
            if i != j:
                c = abs(A[:, i] @ A[:, j]) / (np.linalg.norm(A[:, i]) * np.linalg.norm(A[:, j]))
                best = max(best, c)
    assert coherence(A) == pytest.approx(best, rel=1e-12)


def test_check_conditions_examples():
    rep = check_conditions(np.eye(4), 1)
    assert rep.coherence == 0 and rep.coherence_ok and rep.rip_ok
    A = np.array([[1.0, 0.2, 0.0], [0.0, math.sqrt(1 - 0.04), 0.0], [0.0, 0.0, 1.0]])
    assert coherence(A) == pytest.approx(0.2)
    assert check_conditions(A, 1).coherence_ok
    assert not check_conditions(A, 2).coherence_ok
    big = check_conditions(gen_gaussian_matrix(40, 200, 0), 10)
    assert big.delta_2S is None and big.rip_ok is None


# -- sign-vector maximum -----------------------------------------------------------


def test_psgn_square_is_zero():
    assert max_psgn_norm_sq(build_projection(np.eye(3)))[0] == 0.0


@pytest.mark.parametrize("M,N,seed", [(1, 3, 0), (2, 5, 1), (4, 8, 2), (6, 8, 3)])
def test_psgn_matches_ternary_enumeration(M, N, seed):
    P = build_projection(gen_gaussian_matrix(M, N, seed))
    D = P.dense()
    oracle = max(float(np.sum((D @ np.array(s)) ** 2)) for s in itertools.product((-1, 0, 1), repeat=N))
    val, mode = max_psgn_norm_sq(P, "exact")
    assert mode == EXACT
    assert val == pytest.approx(oracle, rel=1e-12)
    assert val <= N


def test_psgn_sampled_is_lower_bound_and_guard():
    P = build_projection(gen_gaussian_matrix(5, 12, 4))
    exact, _ = max_psgn_norm_sq(P, "exact")
    sampled, mode = max_psgn_norm_sq(P, "sampled", trials=500, seed=1)
    assert mode == SAMPLED and sampled <= exact + 1e-12
    with pytest.raises(TooLarge):
        max_psgn_norm_sq(build_projection(gen_gaussian_matrix(3, 17, 0)), "exact")


# -- the constant t -------------------------------------------------------------------


def test_t_one_dimensional_kernel():
    A = np.array([[1.0, 2.0]])
    x_star = np.array([0.0, 1.0])
    t, mode = estimate_t(A, x_star, M0=5.0)
    assert mode == EXACT
    assert t == pytest.approx(T_ONE_BY_TWO, rel=1e-12)


def test_t_kernel_dim_zero_and_guard():
    assert estimate_t(np.eye(2), np.array([1.0, 0.0]), 1.0)[0] == math.inf
    A = gen_gaussian_matrix(3, 8, 0)
    with pytest.raises(TooLarge):
        estimate_t(A, np.zeros(8), 1.0, "exact")


def test_t_rejects_non_minimizer():
    A = np.array([[1.0, 2.0]])
    with pytest.raises(NotMinimizer):
        estimate_t(A, np.array([2.0, 0.0]), 5.0)


def test_ray_minimum_matches_dense_radii():
    rng = np.random.default_rng(3)
    x_star = np.array([0.5, -0.2, 0.0, 0.0, 0.3])
    for _ in range(20):
        u = rng.standard_normal(5)
        u /= np.linalg.norm(u)
        r = np.linspace(1e-7, 2.0, 200_001)
        X = x_star + r[:, None] * u
        dense = ((np.abs(X).sum(axis=1) - np.abs(x_star).sum()) / r).min()
        assert ray_minimum(x_star, u, 2.0) == pytest.approx(dense, abs=1e-5)


@pytest.mark.parametrize("k", range(4))
def test_exact_t_against_grid_oracle(k):
    prob, x_star = unique_instance(6, 8, 2, 17, start=3 * k)
    M0 = 1.5
    t, mode = estimate_t(prob.A, x_star, M0)
    oracle = grid_t(prob.A, x_star, M0)
    assert mode == EXACT
    assert t <= oracle + 1e-12
    assert oracle - t <= 1e-3 * max(1.0, t)


def test_sampled_t_overstates():
    prob, x_star = unique_instance(6, 8, 2, 5)
    exact, _ = estimate_t(prob.A, x_star, 1.0)
    est, mode = estimate_t(prob.A, x_star, 1.0, "sampled", trials=2000, seed=1)
    assert mode == MONTE_CARLO and est >= exact - 1e-12


@given(st.integers(0, 2**16))
def test_g_bounded_below_by_exact_t(seed):
    prob, x_star = unique_instance(6, 8, 2, 23, start=seed)
    P = build_projection(prob.A)
    tc = instance_constants(prob.A, x_star, mode="exact", proj=P)
    X = sample_solution_space(P, x_star, tc.M0, 2000, seed=seed)
    g = [g_value(x, x_star) for x in X]
    assert min(g) > 0
    assert min(g) >= tc.t - 1e-9
    assert tc.t <= math.sqrt(tc.max_psgn_sq) + 1e-12


# -- derived constants ----------------------------------------------------------------


def test_constants_examples():
    c = constants(t=0.5, max_psgn_sq=4.0, mu=2.0, lam=1.0, M0=1.0, N=100)
    assert c.K == pytest.approx(8.0) and c.d == pytest.approx(4.0)
    assert c.C == pytest.approx(40.0)
    near = constants(t=0.5, max_psgn_sq=4.0, mu=1 + 1e-12, lam=1.0, M0=1.0, N=100)
    assert near.d == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(MuOutOfRange):
        constants(0.5, 4.0, 1.0, 1.0, 1.0, 100)
    with pytest.raises(ValueError):
        constants(0.5, 101.0, 2.0, 1.0, 1.0, 100)
    assert c.certified
    assert c.radius(1e-3, 0.01) == pytest.approx(8e-3 + 0.4)


def test_constants_keyvalue_roundtrip(tmp_path):
    c = constants(0.3, 2.5, 1.5, 2.0, 1.2, 10, t_mode=MONTE_CARLO, max_mode=SAMPLED)
    c.to_keyvalue(tmp_path / "c")
    text = (tmp_path / "c").read_text()
    assert "lambda=" in text
    back = TheoryConstants.from_keyvalue(tmp_path / "c")
    assert back == c and not back.certified


def test_instance_constants_modes():
    prob, x_star = unique_instance(6, 8, 2, 3)
    tc = instance_constants(prob.A, x_star)
    assert tc.certified and tc.N == 8
    prob = make_problem(20, 60, 3, 1)
    tc = instance_constants(prob.A, prob.x_true, trials=500)
    assert tc.t_mode == MONTE_CARLO and tc.max_mode == SAMPLED and not tc.certified


# -- bound sequences ------------------------------------------------------------------


def test_adaptive_truncates_at_mu_one():
    gamma, t, m = 1e-3, 0.5, 2.0
    seq = bound_sequence(gamma * m / (2 * t), gamma, t, m, "adaptive", 100)
    assert len(seq) == 1 and seq.mu[0] == pytest.approx(1.0)
    with pytest.raises(MuOutOfRange):
        bound_sequence(0.5 * gamma * m / (2 * t), gamma, t, m, "adaptive", 100)


def test_const_sequence_length():
    gamma, t, m, mu = 1e-3, 0.5, 2.0, 2.0
    K, d = mu * m / (2 * t), (mu - 1) * m
    seq = bound_sequence(10 * K * gamma, gamma, t, m, mu, 10**6)
    steps = len(seq) - 1
    assert steps == math.ceil(99 * K * K / d)
    assert seq.dev[-1] <= K * gamma * (1 + 1e-12) and seq.dev[-2] > K * gamma
    seq = bound_sequence(10.3 * K * gamma, gamma, t, m, mu, 10**6)
    assert len(seq) - 1 == math.ceil((10.3**2 - 1) * K * K / d)
    with pytest.raises(MuOutOfRange):
        bound_sequence(10 * K * gamma, gamma, t, m, 1000.0, 10)
    with pytest.raises(MuOutOfRange):
        bound_sequence(10 * K * gamma, gamma, t, m, 1.0, 10)


def test_bound_sequence_csv(tmp_path):
    seq = bound_sequence(1.0, 1e-2, 0.5, 2.0, "adaptive", 5)
    seq.to_csv(tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "iter,dev,mu_n" and len(lines) == 7


def test_extend_bound_and_radius():
    seq = BoundSequence(np.array([3.0, 2.0, 1.0]), np.array([2.0, 2.0, 2.0]), "const")
    np.testing.assert_array_equal(extend_bound(seq, 5, 1.5), [3.0, 2.0, 1.5, 1.5, 1.5])
    assert invariant_radius(0.1, 2.0, 9.0) == pytest.approx(0.3)
    assert invariant_radius(0.1, 5.0, 9.0) == pytest.approx(0.5)


@given(st.integers(0, 50), st.floats(1e-4, 1e-2), st.floats(1.0, 20.0))
def test_adaptive_dominated_by_constant(k, gamma, scale):
    prob, x_star = unique_instance(6, 8, 2, 41, start=k)
    tc = instance_constants(prob.A, x_star, mode="exact")
    t, m = tc.t, tc.max_psgn_sq
    start = scale * 4.0 * m / (2 * t) * gamma
    ad = bound_sequence(start, gamma, t, m, "adaptive", 20_000)
    mu1 = ad.mu - 1
    assert np.all(np.diff(mu1[mu1 > 0]) < 0)
    n = len(ad) + 10
    ad_ext = extend_bound(ad, n, invariant_radius(gamma, m / (2 * t), m))
    for mu in (1.5, 2.0, 4.0):
        if mu > 2 * t * start / (gamma * m):
            continue
        c = bound_sequence(start, gamma, t, m, mu, 20_000)
        c_ext = extend_bound(c, n, invariant_radius(gamma, mu * m / (2 * t), m))
        assert np.all(ad_ext <= c_ext * (1 + 1e-12))


# -- iteration-count bounds -------------------------------------------------------------


def test_steps_between_balls_examples():
    assert steps_between_balls(1.5, 0.5, 0.5, 0.4) == pytest.approx(10.0)
    assert steps_between_balls(0.5, 0.5, 0.5, 0.4) == 0.0
    with pytest.raises(KMinTooSmall):
        steps_between_balls(1.0, 0.3, 0.5, 0.4)


def test_steps_to_neighborhood_examples():
    # 2000 + 2 ln(1000) + 2 / (1 - 0.4)
    assert steps_to_neighborhood(1.0, 1e-3, 0.5, 0.4, 1.0) == pytest.approx(2017.1488438912976, rel=1e-12)
    t, m, K0, g = 0.5, 0.4, 1.0, 1e-3
    assert steps_to_neighborhood(K0 * g, g, t, m, K0) == pytest.approx(K0 / t + 2 * K0 / (2 * t - m / K0))
    with pytest.raises(K0TooSmall):
        steps_to_neighborhood(1.0, 1e-3, 0.5, 0.4, 0.3)


# -- compressible signals ---------------------------------------------------------------


def test_compressible_bound_limits():
    assert compressible_deviation_bound(0.5, 0.0, 5, 0.1, 1e-3, 0.0, 8.0, 3.0) == pytest.approx(8e-3)
    val = compressible_deviation_bound(0.5, 1.0, 4, 0.0, 0.0, 0.0, 1.0, 1.0)
    assert val == pytest.approx((3**-0.5 + 1.0) * 4 ** (0.5 - 2.0))
    with pytest.raises(ValueError):
        compressible_deviation_bound(1.0, 1.0, 4, 0.0, 0.0, 0.0, 1.0, 1.0)
