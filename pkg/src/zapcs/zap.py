"""Zero-point attracting projection.

Each iteration pulls the iterate toward the origin along an approximate
gradient of a sparsity penalty and then projects back onto the affine
solution space ``{x : A x = y}``. For the l1 penalty the two steps fold into

    x_{n+1} = x_n - gamma * P sgn(x_n),     P = I - A^T (A A^T)^{-1} A,

which never changes ``A x``. The l0 variant uses a piecewise-linear
attracting term and applies the projection explicitly every step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels, io
from .errors import InitOutOfSolutionSpace
from .linalg import ProjectionOperator, build_projection, least_squares_point
from .signals import RecoveryProblem

DEFAULT_GAMMA = 5e-4


@dataclass(frozen=True)
class AttractingTerm:
    """``variant`` is ``"l1"`` (sign vector) or ``"l0"`` (needs ``alpha > 0``)."""

    variant: str = "l1"
    alpha: float | None = None

    def __post_init__(self):
        if self.variant not in ("l1", "l0"):
            raise ValueError(f"unknown attracting term {self.variant!r}")
        if self.variant == "l0" and not (self.alpha is not None and self.alpha > 0):
            raise ValueError("the l0 attracting term needs alpha > 0")

    @classmethod
    def l1(cls) -> "AttractingTerm":
        return cls("l1")

    @classmethod
    def l0(cls, alpha: float) -> "AttractingTerm":
        return cls("l0", float(alpha))


L1 = AttractingTerm.l1()


def attract(term: AttractingTerm, x) -> np.ndarray:
    """Evaluate the attracting term entrywise.

    l1 gives ``sgn(x)`` with ``sgn(0) = 0``. l0 gives the piecewise gradient
    approximation ``-alpha^2 x - alpha`` on ``[-1/alpha, 0)``,
    ``-alpha^2 x + alpha`` on ``(0, 1/alpha]`` and 0 elsewhere (including at 0).
    """
    x = np.asarray(x, dtype=np.float64)
    if term.variant == "l1":
        return np.sign(x)
    out = np.empty_like(x)
    _kernels.l0_attract(np.ascontiguousarray(x).ravel(), term.alpha, out.ravel())
    return out


def zap_step(x, P: ProjectionOperator, term: AttractingTerm = L1, gamma: float = DEFAULT_GAMMA, y=None):
    """One ZAP update.

    For l1 this is ``x - gamma * P sgn(x)``. For other terms the attraction
    ``x_hat = x - gamma * f(x)`` is followed by the projection
    ``x_hat + A† (y - A x_hat)``; ``y`` defaults to ``A x`` so the update
    stays on the affine space through ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    if term.variant == "l1":
        return x - gamma * P.apply(np.sign(x))
    if y is None:
        y = P.A @ x
    x_hat = x - gamma * attract(term, x)
    return x_hat + P.pinv_apply(y - P.A @ x_hat)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    The run stops after ``max_iters`` iterations, or earlier (``Plateau``)
    when the means of two consecutive blocks of ``plateau_window`` iterates
    differ by at most ``plateau_tol * gamma`` in l2, or when an update leaves
    the iterate unchanged. ``plateau_window = 0`` disables block detection.
    """

    gamma: float = DEFAULT_GAMMA
    max_iters: int = 100_000
    plateau_window: int = 200
    plateau_tol: float = 1.5
    attracting: AttractingTerm = L1
    record_every: int = 100

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.plateau_window < 0 or self.plateau_tol < 0:
            raise ValueError("plateau settings must be nonnegative")


@dataclass(eq=False)
class Trajectory:
    iterations: np.ndarray
    iterates: np.ndarray
    l1_norm: np.ndarray
    residual: np.ndarray
    deviation: np.ndarray | None
    stop_reason: str
    n_iters: int
    config: SolverConfig = field(repr=False, default=None)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "l1_norm", "residual", "deviation"])
            for k, n in enumerate(self.iterations):
                dev = "" if self.deviation is None else io.fmt(self.deviation[k])
                w.writerow([int(n), io.fmt(self.l1_norm[k]), io.fmt(self.residual[k]), dev])

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.to_csv(d / "trajectory.csv")
        io.write_vector(d / "final.csv", self.final)


def solve(
    problem: RecoveryProblem,
    config: SolverConfig = SolverConfig(),
    x0=None,
    reference=None,
    proj: ProjectionOperator | None = None,
) -> Trajectory:
    """Run ZAP on ``problem`` and return the recorded trajectory.

    ``x0`` defaults to the least-squares point ``A† y``. A supplied start must
    satisfy ``||A x0 - y|| <= max(epsilon, 1e-8 ||y||)``. When ``reference``
    is given, ``||x_n - reference||_2`` is recorded alongside the other
    diagnostics.
    """
    A, y = problem.A, problem.y
    if proj is None:
        proj = build_projection(A)
    if x0 is None:
        x = least_squares_point(A, y, proj)
        y_proj = y
    else:
        x = np.array(x0, dtype=np.float64)
        res0 = np.linalg.norm(A @ x - y)
        allowed = max(problem.epsilon * (1 + 1e-9), 1e-8 * np.linalg.norm(y), 1e-12)
        if res0 > allowed:
            raise InitOutOfSolutionSpace(
                f"start point residual {res0:.3e} exceeds allowed {allowed:.3e}"
            )
        y_proj = A @ x
    ref = None if reference is None else np.asarray(reference, dtype=np.float64)

    term = config.attracting
    gamma = config.gamma
    M, N = A.shape
    if term.variant == "l1":
        use_kernel = (N - M) < M
        B = proj.kernel_basis if use_kernel else proj.row_basis
        B = np.ascontiguousarray(B)

        def advance(n_steps, acc):
            return _kernels.l1_steps(x, B, use_kernel, gamma, n_steps, acc)

    else:
        Apinv = np.ascontiguousarray(proj.pinv())
        Ac = np.ascontiguousarray(A)
        yc = np.ascontiguousarray(y_proj)
        alpha = term.alpha

        def advance(n_steps, acc):
            return _kernels.l0_steps(x, Ac, Apinv, yc, gamma, alpha, n_steps, acc)

    its, xs, l1s, res, devs = [], [], [], [], []

    def record(n):
        its.append(n)
        xs.append(x.copy())
        l1s.append(float(np.abs(x).sum()))
        res.append(float(np.linalg.norm(A @ x - y)))
        if ref is not None:
            devs.append(float(np.linalg.norm(x - ref)))

    record(0)
    W = config.plateau_window
    re = config.record_every
    n = 0
    stop = "MaxIters"
    prev_mean = None
    acc = np.zeros(N)
    while n < config.max_iters:
        block_end = min(n + W, config.max_iters) if W > 0 else config.max_iters
        block_start = n
        acc[:] = 0.0
        stationary = False
        while n < block_end:
            chunk = min((n // re + 1) * re, block_end) - n
            done, stationary = advance(chunk, acc)
            n += done
            if n % re == 0:
                record(n)
            if stationary:
                break
        if stationary:
            stop = "Plateau"
            break
        if W > 0 and n - block_start == W:
            mean = acc / W
            if prev_mean is not None and np.linalg.norm(mean - prev_mean) <= config.plateau_tol * gamma:
                stop = "Plateau"
                break
            prev_mean = mean.copy()
    if its[-1] != n:
        record(n)

    return Trajectory(
        iterations=np.asarray(its, dtype=np.int64),
        iterates=np.asarray(xs),
        l1_norm=np.asarray(l1s),
        residual=np.asarray(res),
        deviation=None if ref is None else np.asarray(devs),
        stop_reason=stop,
        n_iters=n,
        config=config,
    )
