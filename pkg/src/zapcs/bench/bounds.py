"""Actual l1-ZAP deviation against the constant-mu and adaptive bound sequences."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import io
from ..errors import ConfigError, NotMinimizer
from ..linalg import build_projection
from ..oracle import P1_MAX_N, l1_min_solution
from ..signals import make_problem
from ..theory import (
    PSGN_MAX_N,
    T_MAX_KERNEL_DIM,
    TheoryConstants,
    bound_sequence,
    extend_bound,
    instance_constants,
    invariant_radius,
)
from ..zap import SolverConfig, solve

MAX_RECORDS = 20_000


@dataclass(eq=False)
class BoundCompareResult:
    iterations: np.ndarray
    actual: np.ndarray
    adaptive: np.ndarray
    const: dict  # mu -> bound values at ``iterations``
    mu_minus_1: np.ndarray  # nan once the adaptive sequence has ended
    constants: TheoryConstants
    gamma: float
    x_star: np.ndarray = field(repr=False, default=None)

    @property
    def certified(self) -> bool:
        return self.constants.certified

    def columns(self) -> list[str]:
        return ["iter", "actual", "adaptive"] + [f"const_mu_{_mu_label(mu)}" for mu in self.const] + ["mu_minus_1"]

    def to_csv(self, path) -> None:
        c = self.constants
        with open(path, "w", newline="") as fh:
            fh.write(f"# certified={self.certified}\n")
            fh.write(f"# t={io.fmt(c.t)} t_mode={c.t_mode}\n")
            fh.write(f"# max_psgn_sq={io.fmt(c.max_psgn_sq)} max_mode={c.max_mode}\n")
            fh.write(f"# gamma={io.fmt(self.gamma)}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns())
            for k, n in enumerate(self.iterations):
                row = [int(n), io.fmt(self.actual[k]), io.fmt(self.adaptive[k])]
                row += [io.fmt(v[k]) for v in self.const.values()]
                mu = self.mu_minus_1[k]
                row.append("" if math.isnan(mu) else io.fmt(mu))
                w.writerow(row)

    def to_svg(self, path, mu_path=None) -> None:
        from .plots import bound_compare_svg, mu_trace_svg

        bound_compare_svg(self, path)
        if mu_path is not None:
            mu_trace_svg(self, mu_path)


def _mu_label(mu: float) -> str:
    return io.fmt(float(mu))


def run_bound_compare(
    N: int,
    M: int,
    S: int,
    gamma: float,
    mus=(1.5, 2.0, 4.0),
    seed: int = 0,
    estimate: bool = False,
    max_iters: int | None = None,
    trials: int = 10_000,
    out_dir=None,
) -> BoundCompareResult:
    """Run l1-ZAP on a seeded noiseless instance and evaluate every bound sequence.

    Without ``estimate`` the instance must admit exact constants
    (``N <= 16`` and ``N - M <= 2``); ``x*`` is then the exhaustive l1
    minimizer when ``N <= 12`` and the planted signal otherwise (exact ``t``
    certifies it). With ``estimate`` the constants are sampled and the result
    is marked non-certified.

    Bounds are reported at each recorded iteration: a sequence is held at its
    last value after it ends and floored at the radius of the invariant ball
    (``mu = 1`` for the adaptive sequence).
    """
    if not estimate and (N > PSGN_MAX_N or N - M > T_MAX_KERNEL_DIM):
        raise ConfigError(
            f"exact constants need N <= {PSGN_MAX_N} and N - M <= {T_MAX_KERNEL_DIM}; pass estimate=True"
        )
    prob = make_problem(M, N, S, seed)
    proj = build_projection(prob.A)
    x_star = prob.x_true
    if not estimate and N <= P1_MAX_N and M < N:
        sol = l1_min_solution(prob.A, prob.y)
        if not sol.unique:
            raise NotMinimizer("the l1 minimizer of this instance is not unique")
        x_star = sol.x
    mode = "sampled" if estimate else "exact"
    consts = instance_constants(prob.A, x_star, mu=2.0, mode=mode, trials=trials, seed=seed, proj=proj)
    t, m = consts.t, consts.max_psgn_sq

    x0 = proj.pinv_apply(prob.y)
    dev0 = float(np.linalg.norm(x0 - x_star))
    cap = max_iters if max_iters is not None else 10 * int(math.ceil(dev0 / (gamma * t))) + 1000
    adaptive = bound_sequence(dev0, gamma, t, m, "adaptive", cap)
    consts_seq = {float(mu): bound_sequence(dev0, gamma, t, m, float(mu), cap) for mu in mus}
    n_iters = max([len(adaptive)] + [len(s) for s in consts_seq.values()])
    n_iters = min(cap, int(1.2 * n_iters) + 100)

    every = max(1, n_iters // MAX_RECORDS)
    cfg = SolverConfig(gamma=gamma, max_iters=n_iters, plateau_window=0, record_every=every)
    traj = solve(prob, cfg, reference=x_star, proj=proj)
    its = traj.iterations
    length = int(its[-1]) + 1

    ad = extend_bound(adaptive, length, invariant_radius(gamma, m / (2.0 * t), m))[its]
    cb = {}
    for mu, seq in consts_seq.items():
        K = mu * m / (2.0 * t)
        cb[mu] = extend_bound(seq, length, invariant_radius(gamma, K, m))[its]
    mu1 = np.full(len(its), np.nan)
    inside = its < len(adaptive)
    mu1[inside] = adaptive.mu[its[inside]] - 1.0

    result = BoundCompareResult(its, traj.deviation, ad, cb, mu1, consts, gamma, x_star)
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        result.to_csv(d / "bound_compare.csv")
        result.to_svg(d / "bound_compare.svg", d / "mu_trace.svg")
    return result
