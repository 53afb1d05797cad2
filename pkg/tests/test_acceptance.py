"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines appear in
the "acceptance criteria" section at the end of the session.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from zapcs.bench import preset, run_bound_compare, run_experiment
from zapcs.linalg import build_projection
from zapcs.oracle import l1_min_solution
from zapcs.signals import (
    best_s_approx,
    derive_seed,
    gen_compressible_signal,
    gen_gaussian_matrix,
    make_problem,
    tail_constants,
)
from zapcs.theory import (
    instance_constants,
    max_psgn_norm_sq,
    psgn_norms,
    rip_constant,
    sample_solution_space,
    steps_between_balls,
    steps_to_neighborhood,
    tail_image_bound,
)
from zapcs.zap import AttractingTerm, SolverConfig, solve

MASTER = 20251016
DATA = Path(__file__).parent / "data"


def report(n, ok, detail, elapsed):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def exact_instances(count, S, master, max_tries):
    """Seeded ``N=8, M=6`` instances whose l1 minimizer is unique.

    Returns ``(instances, reseeds)``; an instance is
    ``(problem, x_star, constants, proj)``.
    """
    out, reseeds, k = [], 0, 0
    while len(out) < count and k < max_tries:
        prob = make_problem(6, 8, S, derive_seed(master, k))
        k += 1
        sol = l1_min_solution(prob.A, prob.y)
        if not sol.unique:
            reseeds += 1
            continue
        proj = build_projection(prob.A)
        tc = instance_constants(prob.A, sol.x, mu=2.0, mode="exact", proj=proj)
        out.append((prob, sol.x, tc, proj))
    return out, reseeds


@pytest.fixture(scope="module")
def exact_runs():
    """Criterion-3 instances with full per-iteration trajectories."""
    t0 = time.perf_counter()
    insts, reseeds = exact_instances(20, 2, MASTER, 40)
    gamma = 1e-4
    runs = []
    for prob, x_star, tc, proj in insts:
        dev0 = float(np.linalg.norm(proj.pinv_apply(prob.y) - x_star))
        need = steps_to_neighborhood(dev0, gamma, tc.t, tc.max_psgn_sq, tc.K)
        cfg = SolverConfig(gamma=gamma, max_iters=int(1.2 * need) + 2000, plateau_window=0, record_every=1)
        traj = solve(prob, cfg, reference=x_star, proj=proj)
        runs.append((prob, x_star, tc, proj, traj))
    return runs, reseeds, time.perf_counter() - t0


def test_criterion_01_projection_algebra():
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for k in range(100):
        A = gen_gaussian_matrix(20, 50, derive_seed(MASTER, k))
        P = build_projection(A)
        v = np.random.default_rng(k).standard_normal(50)
        Pv = P.apply(v)
        nv = np.linalg.norm(v)
        idem = np.linalg.norm(P.apply(Pv) - Pv) / nv
        ann = np.linalg.norm(A @ Pv) / nv
        worst = max(worst, idem, ann)
        ok &= idem <= 1e-10 and ann <= 1e-10 and np.linalg.norm(Pv) <= nv
    el = time.perf_counter() - t0
    report(1, ok and el < 5, f"worst relative error {worst:.2e}", el)


def test_criterion_02_solution_space_invariance():
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(20):
        prob = make_problem(80, 200, 10, derive_seed(MASTER, k))
        proj = build_projection(prob.A)
        ny = np.linalg.norm(prob.y)
        for term in (AttractingTerm.l1(), AttractingTerm.l0(1.0)):
            cfg = SolverConfig(gamma=5e-4, max_iters=2000, plateau_window=0, record_every=1, attracting=term)
            traj = solve(prob, cfg, proj=proj)
            assert traj.n_iters == 2000 and len(traj.residual) == 2001
            worst = max(worst, float(traj.residual.max() / ny))
    el = time.perf_counter() - t0
    report(2, worst <= 1e-8 and el < 30, f"max residual / ||y|| = {worst:.2e}", el)


def test_criterion_03_descent_exact_constants(exact_runs):
    runs, reseeds, setup = exact_runs
    t0 = time.perf_counter()
    violations = 0
    checked = 0
    min_slack = math.inf
    for prob, x_star, tc, proj, traj in runs:
        gamma = traj.config.gamma
        dev = traj.deviation
        active = dev[:-1] >= tc.K * gamma
        lhs = dev[1:] ** 2
        rhs = dev[:-1] ** 2 - tc.d * gamma * gamma
        slack = (rhs - lhs)[active]
        checked += int(active.sum())
        violations += int(np.sum(slack < 0))
        if slack.size:
            min_slack = min(min_slack, float(slack.min()))
    rate = reseeds / (len(runs) + reseeds)
    el = setup + time.perf_counter() - t0
    ok = len(runs) == 20 and violations == 0 and rate <= 0.2 and el < 120
    detail = (
        f"{violations} violations over {checked} steps in {len(runs)} instances, "
        f"min slack {min_slack:.2e}, re-seed rate {rate:.0%}"
    )
    report(3, ok, detail, el)


def test_criterion_04_psgn_chain(exact_runs):
    runs, _, _ = exact_runs
    t0 = time.perf_counter()
    ok = True
    gaps = []
    for i, (prob, x_star, tc, proj, traj) in enumerate(runs):
        X = sample_solution_space(proj, x_star, tc.M0, 10_000, seed=i)
        lo = float(psgn_norms(proj, X).min())
        hi = math.sqrt(max_psgn_norm_sq(proj, "exact")[0])
        N = prob.A.shape[1]
        ok &= tc.t <= lo + 1e-9 and lo <= hi + 1e-9 and hi <= math.sqrt(N) + 1e-9
        gaps.append((tc.t, lo, hi))
    el = time.perf_counter() - t0
    worst = min(lo - t for t, lo, _ in gaps)
    report(4, ok, f"t <= min ||P sgn|| <= max ||P sgn|| <= sqrt(N) on {len(runs)} instances, min gap {worst:.3f}", el)


def test_criterion_05_oracle_convergence():
    t0 = time.perf_counter()
    insts, reseeds = exact_instances(10, 1, MASTER + 5, 20)
    gamma = 1e-5
    worst_err, worst_ratio = 0.0, 0.0
    for prob, x_star, tc, proj in insts:
        traj = solve(prob, SolverConfig(gamma=gamma, max_iters=2_000_000), proj=proj)
        err = float(np.linalg.norm(traj.final - x_star))
        worst_err = max(worst_err, err)
        worst_ratio = max(worst_ratio, err / (tc.K * gamma))
    el = time.perf_counter() - t0
    ok = len(insts) == 10 and worst_err <= 1e-3 and worst_ratio <= 1.0 and el < 180
    report(5, ok, f"max ||x - x*|| = {worst_err:.2e}, max deviation / (K gamma) = {worst_ratio:.3f}, re-seeds {reseeds}", el)


def test_criterion_06_bound_dominance():
    t0 = time.perf_counter()
    res = run_bound_compare(8, 6, 2, 1e-4, (1.5, 2.0, 4.0), seed=derive_seed(MASTER, 0))
    rel = 1e-12
    under = bool(np.all(res.actual <= res.adaptive * (1 + rel)))
    dominated = all(bool(np.all(res.adaptive <= v * (1 + rel))) for v in res.const.values())
    mu1 = res.mu_minus_1[np.isfinite(res.mu_minus_1)]
    mu1 = mu1[mu1 > 0]
    decreasing = bool(np.all(np.diff(mu1) < 0))
    el = time.perf_counter() - t0
    ok = res.certified and under and dominated and decreasing and len(mu1) > 10 and el < 60
    detail = (
        f"{len(res.iterations)} recorded iterations; actual <= adaptive: {under}; "
        f"adaptive <= const(1.5, 2, 4): {dominated}; mu_n - 1 strictly decreasing: {decreasing}"
    )
    report(6, ok, detail, el)


def test_criterion_07_rate_bounds(exact_runs):
    runs, _, _ = exact_runs
    t0 = time.perf_counter()
    ok = True
    worst6 = worst2 = 0.0
    for prob, x_star, tc, proj, traj in runs:
        gamma = traj.config.gamma
        dev = traj.deviation
        K0 = tc.K
        inside = np.flatnonzero(dev <= K0 * gamma)
        b6 = steps_to_neighborhood(float(dev[0]), gamma, tc.t, tc.max_psgn_sq, K0)
        if inside.size == 0:
            ok = False
            continue
        worst6 = max(worst6, inside[0] / b6)
        ok &= inside[0] <= b6
        K_max = 0.5 * float(dev[0]) / gamma
        K_min = K0
        start = int(np.flatnonzero(dev <= K_max * gamma)[0])
        steps = int(inside[0]) - start
        b2 = steps_between_balls(K_max, K_min, tc.t, tc.max_psgn_sq)
        worst2 = max(worst2, steps / b2)
        ok &= steps <= b2
    el = time.perf_counter() - t0
    report(7, ok and el < 120, f"max measured/bound: entry {worst6:.3f}, ball-to-ball {worst2:.3f}", el)


def test_criterion_08_noisy_bound():
    t0 = time.perf_counter()
    gamma = 1e-4
    checked = 0
    ok = True
    worst_noisy = worst_clean = 0.0
    k = 0
    while checked < 5 and k < 20:
        prob = make_problem(6, 8, 2, derive_seed(MASTER + 8, k), 30.0)
        k += 1
        # the perturbed system is still consistent, so its l1 minimizer is the reference
        noisy = l1_min_solution(prob.A, prob.y)
        clean = l1_min_solution(prob.A, prob.A @ prob.x_true)
        if not (noisy.unique and clean.unique):
            continue
        proj = build_projection(prob.A)
        tn = instance_constants(prob.A, noisy.x, mu=2.0, mode="exact", proj=proj)
        tcl = instance_constants(prob.A, clean.x, mu=2.0, mode="exact", proj=proj)
        traj = solve(prob, SolverConfig(gamma=gamma, max_iters=2_000_000), proj=proj)
        dn = float(np.linalg.norm(traj.final - noisy.x))
        dc = float(np.linalg.norm(traj.final - clean.x))
        bn = tn.radius(gamma, prob.epsilon)
        bc = tcl.radius(gamma, prob.epsilon)
        worst_noisy = max(worst_noisy, dn / bn)
        worst_clean = max(worst_clean, dc / bc)
        ok &= dn <= bn and dc <= bc
        checked += 1
    el = time.perf_counter() - t0
    detail = (
        f"{checked} instances; max deviation / (K gamma + C eps): "
        f"noisy-system minimizer {worst_noisy:.3f}, clean minimizer {worst_clean:.3f}"
    )
    report(8, ok and checked == 5 and el < 120, detail, el)


def _phase_m_counts(report_):
    return [int(row["ZapL1_success"]) for row in report_.rows]


def test_criterion_09_phase_transition_desk():
    t0 = time.perf_counter()
    cfg = preset("desk-phase-m", MASTER)
    rep = run_experiment(cfg)
    probs = [row["ZapL1_prob"] for row in rep.rows]
    drops = [probs[i] - probs[i + 1] for i in range(len(probs) - 1) if probs[i + 1] < probs[i]]
    monotone = len(drops) == 0 or (len(drops) == 1 and drops[0] <= 0.05 + 1e-12)
    frozen = [int(v) for v in (DATA / "desk_phase_m_success.txt").read_text().split()]
    counts = _phase_m_counts(rep)
    el = time.perf_counter() - t0
    ok = monotone and probs[-1] >= 0.95 and counts == frozen and el < 600
    report(9, ok, f"success counts {counts} (frozen {frozen}), P(M=120) = {probs[-1]:.2f}", el)


def test_criterion_10_step_noise_grid():
    t0 = time.perf_counter()
    rep = run_experiment(preset("desk-step-noise", MASTER))
    table = {(row["snr_db"], row["gamma"]): row["ZapL1_mean_snr_db"] for row in rep.rows}
    gammas = sorted({g for _, g in table}, reverse=True)
    clean = [table[(math.inf, g)] for g in gammas]
    increasing = all(b > a for a, b in zip(clean, clean[1:]))
    flat = abs(table[(20.0, 1e-4)] - table[(20.0, 1e-5)])
    el = time.perf_counter() - t0
    ok = increasing and flat <= 3.0 and el < 600
    detail = f"noiseless SNR by gamma {['%.1f' % v for v in clean]}, 20 dB flatness {flat:.2f} dB"
    report(10, ok, detail, el)


def test_criterion_11_compressible():
    t0 = time.perf_counter()
    ok = True
    n_sig = 0
    for i in range(20):
        p = (0.3, 0.5, 0.7)[i % 3]
        sig = gen_compressible_signal(100, p, 1.0 + 0.1 * i, derive_seed(MASTER + 11, i))
        Cp, Dp = tail_constants(p)
        for S in (5, 10):
            _, t1, t2 = best_s_approx(sig.values, S)
            ok &= t1 <= Cp * sig.R * S ** (1 - 1 / p) * (1 + 1e-12)
            ok &= t2 <= Dp * sig.R * S ** (0.5 - 1 / p) * (1 + 1e-12)
        n_sig += 1
    n_img = 0
    for i in range(6):
        A = gen_gaussian_matrix(6, 12, derive_seed(MASTER + 111, i))
        sig = gen_compressible_signal(12, (0.3, 0.5, 0.7)[i % 3], 1.0, derive_seed(MASTER + 112, i))
        for S in (2, 3):
            xs, t1, t2 = best_s_approx(sig.values, S)
            lhs = np.linalg.norm(A @ (sig.values - xs))
            ok &= lhs <= tail_image_bound(rip_constant(A, S), t2, t1, S) * (1 + 1e-12)
            n_img += 1
    el = time.perf_counter() - t0
    report(11, ok and el < 60, f"{n_sig} signals x 2 sparsities tail bounds, {n_img} image bounds with exact delta_S", el)


def test_criterion_12_determinism_workers():
    t0 = time.perf_counter()
    cfg = preset("desk-phase-m", MASTER)
    first = run_experiment(cfg).to_csv_text()
    second = run_experiment(cfg).to_csv_text()
    parallel = run_experiment(replace(cfg, workers=8)).to_csv_text()
    el = time.perf_counter() - t0
    ok = first == second == parallel and el < 1200
    report(12, ok, f"repeat identical: {first == second}, workers 1 vs 8 identical: {first == parallel}", el)
