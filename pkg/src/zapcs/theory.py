"""Convergence constants, bound sequences and recovery conditions for l1-ZAP.

Notation used throughout:

``t``
    Largest constant with ``||x||_1 - ||x*||_1 >= t ||x - x*||_2`` for every
    ``x`` in the solution space within distance ``M0`` of the l1 minimizer.
``m`` (``max_psgn_sq``)
    ``max_s ||P s||_2^2`` over sign vectors ``s``.
``K, d``
    ``K = mu m / (2 t)`` and ``d = (mu - 1) m``. While ``||x_n - x*|| >= K gamma``
    the squared deviation drops by at least ``d gamma^2`` per iteration.
``lambda, C``
    ``lambda = 1 / sigma_min(A)^2`` and ``C = (2 / t) sqrt(N lambda)``; with
    noise energy ``eps`` the iterate settles within ``K gamma + C eps``.

Exact values of ``t`` and ``m`` are only available for small instances
(kernel dimension <= 2 and ``N <= 16`` respectively). Sampled substitutes are
labelled: a sampled ``t`` over-states the true constant and a sampled ``m``
under-states it, so neither certifies anything.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import asdict, dataclass
from math import comb

import numpy as np

from . import io
from .errors import K0TooSmall, KMinTooSmall, MuOutOfRange, NotMinimizer, TooLarge, ZeroColumn
from .linalg import ProjectionOperator, as_matrix, build_projection, least_squares_point, max_eig_gram_inverse
from .signals import rng_for, tail_constants

EXACT = "Exact"
SAMPLED = "SampledLowerBound"
MONTE_CARLO = "MonteCarloEstimate"

RIP_MAX_SUBSETS = 10**6
PSGN_MAX_N = 16
T_MAX_KERNEL_DIM = 2
RIP_THRESHOLD = math.sqrt(2.0) - 1.0


# -- matrix conditions --------------------------------------------------------


def rip_constant(A, S: int) -> float:
    """Exact restricted isometry constant ``delta_S`` by subset enumeration.

    Only subsets of size exactly ``min(S, N)`` are scanned: by eigenvalue
    interlacing a column subset never has a wider Gram spectrum than its
    supersets.
    """
    A = as_matrix(A)
    N = A.shape[1]
    if S < 1:
        raise ValueError("S must be >= 1")
    k = min(S, N)
    n_sub = comb(N, k)
    if n_sub > RIP_MAX_SUBSETS:
        raise TooLarge(f"C({N}, {k}) = {n_sub} subsets exceeds {RIP_MAX_SUBSETS}")
    delta = 0.0
    subsets = itertools.combinations(range(N), k)
    while True:
        chunk = np.array(list(itertools.islice(subsets, 4096)), dtype=np.intp)
        if chunk.size == 0:
            break
        sub = A[:, chunk]  # (M, C, k)
        gram = np.einsum("mci,mcj->cij", sub, sub)
        ev = np.linalg.eigvalsh(gram)
        delta = max(delta, float(np.max(ev[:, -1] - 1.0)), float(np.max(1.0 - ev[:, 0])))
    return delta


def coherence(A) -> float:
    """Largest absolute inner product between distinct normalized columns."""
    A = as_matrix(A)
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ZeroColumn(f"zero column(s) at {np.flatnonzero(norms == 0).tolist()}")
    if A.shape[1] < 2:
        return 0.0
    U = A / norms
    G = np.abs(U.T @ U)
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


@dataclass(frozen=True)
class ConditionReport:
    coherence: float
    coherence_ok: bool
    delta_2S: float | None = None
    rip_ok: bool | None = None


def check_conditions(A, S: int) -> ConditionReport:
    """Evaluate ``delta_2S < sqrt(2) - 1`` and ``S < 1 / (3 mu(A))``.

    The RIP fields stay None when exhaustive evaluation is too large.
    """
    mu = coherence(A)
    coh_ok = bool(S < 1.0 / (3.0 * mu)) if mu > 0 else True
    try:
        d2s = rip_constant(A, 2 * S)
    except TooLarge:
        return ConditionReport(mu, coh_ok)
    return ConditionReport(mu, coh_ok, d2s, bool(d2s < RIP_THRESHOLD))


# -- max ||P sgn(x)||^2 ---------------------------------------------------------


def _as_projection(P_or_A) -> ProjectionOperator:
    return P_or_A if isinstance(P_or_A, ProjectionOperator) else build_projection(P_or_A)


def _vertex_block(N: int, start: int, stop: int) -> np.ndarray:
    """Rows of {-1, +1}^N for integer codes in [start, stop); bit j -> coordinate j."""
    codes = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(N, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def max_psgn_norm_sq(P, mode: str = "exact", trials: int = 10_000, seed: int = 0) -> tuple[float, str]:
    """Maximum of ``||P s||_2^2`` over sign vectors ``s``.

    ``mode="exact"`` (``N <= 16``) scans the ``2^(N-1)`` vertices of the cube
    up to global sign. ``s -> ||P s||^2`` is convex, so its maximum over
    ``{-1, 0, 1}^N`` is attained at a vertex. ``mode="sampled"`` takes the
    best of ``trials`` random vertices, which is only a lower bound.

    Returns ``(value, mode_used)``.
    """
    P = _as_projection(P)
    Q = P.kernel_basis
    N = Q.shape[0]
    if Q.shape[1] == 0:
        return 0.0, EXACT if mode == "exact" else SAMPLED
    if mode == "exact":
        if N > PSGN_MAX_N:
            raise TooLarge(f"exact sign enumeration needs N <= {PSGN_MAX_N}, got N={N}")
        total = 1 << (N - 1)
        best = 0.0
        for start in range(0, total, 1 << 15):
            S = _vertex_block(N, start, min(total, start + (1 << 15)))
            best = max(best, float(np.max(np.sum((S @ Q) ** 2, axis=1))))
        return min(best, float(N)), EXACT
    if mode == "sampled":
        rng = rng_for(seed)
        best = 0.0
        left = trials
        while left > 0:
            n = min(left, 4096)
            S = rng.choice(np.array([-1.0, 1.0]), size=(n, N))
            best = max(best, float(np.max(np.sum((S @ Q) ** 2, axis=1))))
            left -= n
        return best, SAMPLED
    raise ValueError(f"unknown mode {mode!r}")


def psgn_norms(P, X) -> np.ndarray:
    """``||P sgn(x)||_2`` for each row ``x`` of ``X``."""
    P = _as_projection(P)
    Q = P.kernel_basis
    return np.linalg.norm(np.sign(np.atleast_2d(X)) @ Q, axis=1)


# -- the sharpness constant t ------------------------------------------------------


def ray_minimum(x_star, u, M0: float) -> float:
    """Exact ``inf_{0 < r <= M0} g(x* + r u)`` for a unit direction ``u``.

    ``r -> ||x* + r u||_1`` is piecewise linear with breaks where a
    coordinate crosses zero, so on each piece ``g = a / r + b`` is monotone
    and the infimum is attained at a breakpoint, at ``M0``, or in the limit
    ``r -> 0+`` (where ``g`` tends to ``G(u)``).
    """
    x_star = np.asarray(x_star, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    base = np.abs(x_star).sum()
    on = x_star != 0
    limit = float(np.sum(u[on] * np.sign(x_star[on])) + np.sum(np.abs(u[~on])))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = -x_star / u
    r = r[np.isfinite(r) & (r > 0) & (r <= M0)]
    radii = np.append(r, M0)
    pts = x_star[None, :] + radii[:, None] * u[None, :]
    g = (np.abs(pts).sum(axis=1) - base) / radii
    return float(min(limit, g.min()))


def _circle_candidates(Q, x_star) -> np.ndarray:
    """Directions in a 2-D kernel where ``G`` can attain its minimum.

    Writing ``u(theta) = cos(theta) q1 + sin(theta) q2``, ``G`` equals
    ``a cos(theta) + b sin(theta)`` between consecutive zero crossings of the
    off-support coordinates, so its minimum on each arc is at an end point or
    at the arc's interior critical point.
    """
    q1, q2 = Q[:, 0], Q[:, 1]
    on = x_star != 0
    off = np.flatnonzero(~on & ((q1 != 0) | (q2 != 0)))
    brk = np.mod(np.arctan2(-q1[off], q2[off]), np.pi)
    brk = np.unique(np.concatenate([brk, brk + np.pi]))
    if brk.size == 0:
        brk = np.array([0.0])
    ends = np.append(brk, brk[0] + 2 * np.pi)
    cands = list(brk)
    sgn = np.sign(x_star)
    for lo, hi in zip(ends[:-1], ends[1:]):
        mid = 0.5 * (lo + hi)
        um = math.cos(mid) * q1 + math.sin(mid) * q2
        w = np.where(on, sgn, np.sign(um))
        a, b = float(w @ q1), float(w @ q2)
        crit = math.atan2(b, a) + math.pi  # minimizer of a cos + b sin
        crit = lo + np.mod(crit - lo, 2 * np.pi)
        if crit < hi:
            cands.append(crit)
    theta = np.asarray(cands)
    return np.cos(theta)[:, None] * q1[None, :] + np.sin(theta)[:, None] * q2[None, :]


def estimate_t(
    A, x_star, M0: float, mode: str = "exact", trials: int = 10_000, seed: int = 0
) -> tuple[float, str]:
    """Sharpness constant ``t = inf g(x)`` over the solution space ball of radius ``M0``.

    ``mode="exact"`` needs ``dim ker(A) <= 2``: every candidate minimizing
    direction is enumerated and minimized exactly along its ray. ``"sampled"``
    returns the smallest ``g`` over ``trials`` random points, which can only
    over-state ``t``.

    Raises
    ------
    NotMinimizer
        If some point of the solution space has ``g <= 0``, i.e. ``x_star``
        is not the unique l1 minimizer.
    """
    P = _as_projection(A)
    x_star = np.asarray(x_star, dtype=np.float64)
    Q = P.kernel_basis
    k = Q.shape[1]
    if k == 0:
        return math.inf, EXACT if mode == "exact" else MONTE_CARLO
    if mode == "exact":
        if k > T_MAX_KERNEL_DIM:
            raise TooLarge(f"exact t needs kernel dimension <= {T_MAX_KERNEL_DIM}, got {k}")
        dirs = np.vstack([Q[:, 0], -Q[:, 0]]) if k == 1 else _circle_candidates(Q, x_star)
        t = min(ray_minimum(x_star, u, M0) for u in dirs)
        if not t > 0:
            raise NotMinimizer(f"g reaches {t:.3e} <= 0; x_star is not the unique l1 minimizer")
        return t, EXACT
    if mode == "sampled":
        rng = rng_for(seed)
        Z = rng.standard_normal((trials, k))
        U = Z @ Q.T
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        r = M0 * (1.0 - rng.random(trials))  # (0, M0]
        X = x_star[None, :] + r[:, None] * U
        g = (np.abs(X).sum(axis=1) - np.abs(x_star).sum()) / r
        t = float(g.min())
        if not t > 0:
            raise NotMinimizer(f"sampled g reaches {t:.3e} <= 0")
        return t, MONTE_CARLO
    raise ValueError(f"unknown mode {mode!r}")


def sample_solution_space(P, x_star, M0: float, trials: int, seed: int = 0) -> np.ndarray:
    """Random points ``x* + r u`` with ``u`` a unit kernel vector, ``0 < r <= M0``."""
    P = _as_projection(P)
    Q = P.kernel_basis
    rng = rng_for(seed)
    U = rng.standard_normal((trials, Q.shape[1])) @ Q.T
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    r = M0 * (1.0 - rng.random(trials))
    return np.asarray(x_star)[None, :] + r[:, None] * U


# -- derived constants -------------------------------------------------------------


@dataclass(frozen=True)
class TheoryConstants:
    t: float
    t_mode: str
    max_psgn_sq: float
    max_mode: str
    mu: float
    K: float
    d: float
    lam: float
    C: float
    M0: float
    N: int

    @property
    def certified(self) -> bool:
        return self.t_mode == EXACT and self.max_mode == EXACT

    def radius(self, gamma: float, epsilon: float = 0.0) -> float:
        """Neighbourhood radius ``K gamma + C eps``."""
        return self.K * gamma + (self.C * epsilon if epsilon else 0.0)

    def to_keyvalue(self, path) -> None:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        io.write_keyvalue(path, d)

    @classmethod
    def from_keyvalue(cls, path) -> "TheoryConstants":
        kv = io.read_keyvalue(path)
        return cls(
            t=float(kv["t"]),
            t_mode=kv["t_mode"],
            max_psgn_sq=float(kv["max_psgn_sq"]),
            max_mode=kv["max_mode"],
            mu=float(kv["mu"]),
            K=float(kv["K"]),
            d=float(kv["d"]),
            lam=float(kv["lambda"]),
            C=float(kv["C"]),
            M0=float(kv["M0"]),
            N=int(kv["N"]),
        )


def constants(
    t: float,
    max_psgn_sq: float,
    mu: float,
    lam: float,
    M0: float,
    N: int,
    t_mode: str = EXACT,
    max_mode: str = EXACT,
) -> TheoryConstants:
    if not mu > 1:
        raise MuOutOfRange(f"mu must exceed 1, got {mu}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if max_psgn_sq > N * (1 + 1e-12):
        raise ValueError(f"max ||P sgn||^2 = {max_psgn_sq} exceeds N = {N}")
    K = mu / (2.0 * t) * max_psgn_sq
    d = (mu - 1.0) * max_psgn_sq
    C = 2.0 / t * math.sqrt(N * lam)
    return TheoryConstants(t, t_mode, max_psgn_sq, max_mode, mu, K, d, lam, C, M0, N)


def instance_constants(
    A,
    x_star,
    mu: float = 2.0,
    M0: float | None = None,
    mode: str = "auto",
    trials: int = 10_000,
    seed: int = 0,
    proj: ProjectionOperator | None = None,
) -> TheoryConstants:
    """All constants for ``(A, x_star)``, exact wherever the guards allow.

    ``M0`` defaults to ``||x0 - x*|| + 1`` with ``x0`` the least-squares
    point, which the deviation never exceeds.
    """
    P = proj if proj is not None else build_projection(A)
    x_star = np.asarray(x_star, dtype=np.float64)
    M, N = P.shape
    if M0 is None:
        x0 = least_squares_point(P.A, P.A @ x_star, P)
        M0 = float(np.linalg.norm(x0 - x_star)) + 1.0
    if mode == "auto":
        t_mode = "exact" if P.kernel_dim <= T_MAX_KERNEL_DIM else "sampled"
        m_mode = "exact" if N <= PSGN_MAX_N else "sampled"
    else:
        t_mode = m_mode = mode
    t, t_used = estimate_t(P, x_star, M0, t_mode, trials, seed)
    m, m_used = max_psgn_norm_sq(P, m_mode, trials, seed)
    lam = max_eig_gram_inverse(P.A)
    return constants(t, m, mu, lam, M0, N, t_used, m_used)


# -- bound sequences --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundSequence:
    dev: np.ndarray
    mu: np.ndarray
    mode: str  # "const" or "adaptive"

    def __len__(self):
        return len(self.dev)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "dev", "mu_n"])
            for n, (dv, mu) in enumerate(zip(self.dev, self.mu)):
                w.writerow([n, io.fmt(dv), io.fmt(mu)])


def bound_sequence(
    start_dev: float, gamma: float, t: float, max_psgn_sq: float, mu_mode, steps: int
) -> BoundSequence:
    """Deviation sequence that dominates the actual l1-ZAP deviation.

    ``mu_mode`` is a number ``mu > 1`` for the constant-step sequence
    ``dev_{n+1}^2 = dev_n^2 - d gamma^2``, which stops at the first value at or
    below ``K gamma``; or ``"adaptive"`` for
    ``dev_{n+1}^2 = dev_n^2 - 2 gamma t dev_n + gamma^2 m`` with
    ``mu_n = 2 t dev_n / (gamma m)``, which stops once ``mu_n <= 1`` or when
    ``mu_n - 1`` no longer decreases in floating point. At most ``steps``
    updates are applied.
    """
    m = max_psgn_sq
    if isinstance(mu_mode, str):
        if mu_mode != "adaptive":
            raise ValueError(f"unknown mu mode {mu_mode!r}")
        mu0 = 2.0 * t * start_dev / (gamma * m)
        if mu0 < 1.0 - 1e-12:
            raise MuOutOfRange(f"adaptive mu_0 = {mu0} < 1: start is already inside the K gamma ball")
        devs, mus = [start_dev], [mu0]
        while len(devs) <= steps and mus[-1] > 1.0:
            cur = devs[-1]
            nxt = math.sqrt(max(cur * cur - 2.0 * gamma * t * cur + gamma * gamma * m, 0.0))
            mu_next = 2.0 * t * nxt / (gamma * m)
            if not mu_next - 1.0 < mus[-1] - 1.0:
                break  # floating-point stall
            devs.append(nxt)
            mus.append(mu_next)
        return BoundSequence(np.asarray(devs), np.asarray(mus), "adaptive")

    mu = float(mu_mode)
    limit = 2.0 * t / gamma * start_dev / m
    if not 1.0 < mu <= limit * (1 + 1e-12):
        raise MuOutOfRange(f"need 1 < mu <= {limit:.6g} at the start deviation, got {mu}")
    K = mu / (2.0 * t) * m
    d = (mu - 1.0) * m
    devs = [start_dev]
    while len(devs) <= steps and devs[-1] > K * gamma:
        sq = devs[-1] ** 2 - d * gamma * gamma
        if sq < 0:
            break
        devs.append(math.sqrt(sq))
    return BoundSequence(np.asarray(devs), np.full(len(devs), mu), "const")


def invariant_radius(gamma: float, K: float, max_psgn_sq: float) -> float:
    """Radius ``max(K gamma, gamma sqrt(m))`` of a ball the iterates never leave once inside."""
    return max(K * gamma, gamma * math.sqrt(max_psgn_sq))


def extend_bound(seq: BoundSequence, length: int, floor: float) -> np.ndarray:
    """Bound values for iterations ``0..length-1``: the sequence, held at its
    last value once it ends, and never below ``floor``."""
    out = np.empty(length)
    n = min(length, len(seq.dev))
    out[:n] = seq.dev[:n]
    out[n:] = seq.dev[-1]
    return np.maximum(out, floor)


# -- iteration-count bounds -----------------------------------------------------------


def steps_between_balls(K_max: float, K_min: float, t: float, max_psgn_sq: float) -> float:
    """Steps needed to go from the ``K_max gamma`` ball to the ``K_min gamma`` ball."""
    if not K_min > max_psgn_sq / (2.0 * t):
        raise KMinTooSmall(f"K_min must exceed m/(2t) = {max_psgn_sq / (2.0 * t):.6g}")
    if K_max < K_min:
        raise ValueError("K_max must be >= K_min")
    return 2.0 * (K_max - K_min) / (2.0 * t - max_psgn_sq / K_min)


def steps_to_neighborhood(M0: float, gamma: float, t: float, max_psgn_sq: float, K0: float) -> float:
    """Steps needed to enter the ``K0 gamma`` ball from distance ``M0``."""
    if not K0 > max_psgn_sq / (2.0 * t):
        raise K0TooSmall(f"K0 must exceed m/(2t) = {max_psgn_sq / (2.0 * t):.6g}")
    return (
        M0 / (t * gamma)
        + K0 / t * math.log(M0 / (K0 * gamma))
        + 2.0 * K0 / (2.0 * t - max_psgn_sq / K0)
    )


# -- compressible signals ----------------------------------------------------------------


def compressible_deviation_bound(
    p: float, R: float, S: int, delta_S: float, gamma: float, epsilon: float, K: float, C_prime: float
) -> float:
    """``K gamma + C' eps + C' sqrt(1 + delta_S) (D_p + C_p) R S^(1/2 - 1/p)``.

    ``C_prime`` is ``C + C_S`` where ``C_S`` (the noise-stability constant of
    the underlying l1 problem) must be supplied by the caller.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    Cp, Dp = tail_constants(p)
    return (
        K * gamma
        + C_prime * epsilon
        + C_prime * math.sqrt(1.0 + delta_S) * (Dp + Cp) * R * S ** (0.5 - 1.0 / p)
    )


def tail_image_bound(delta_S: float, tail_l2: float, tail_l1: float, S: int) -> float:
    """Upper bound ``sqrt(1 + delta_S) (||x - x_S||_2 + ||x - x_S||_1 / sqrt(S))`` on ``||A (x - x_S)||_2``."""
    return math.sqrt(1.0 + delta_S) * (tail_l2 + tail_l1 / math.sqrt(S))
