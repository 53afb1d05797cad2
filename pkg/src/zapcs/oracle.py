"""Brute-force reference solvers for tiny instances.

``sparsest_solution`` enumerates supports by increasing size. ``l1_min_solution``
enumerates basic solutions: over the affine set ``{A x = y}`` the l1 norm is
minimized at a point supported on at most ``M`` linearly independent columns,
so scanning every invertible ``M x M`` column submatrix is exhaustive. Both
are exponential in ``N`` and guarded accordingly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, DegenerateInput, Infeasible, TooLarge
from .linalg import RANK_TOL, as_matrix

P0_MAX_N = 14
P1_MAX_N = 12
FIT_TOL = 1e-8
TIE_TOL = 1e-8
_ZERO_REL = 1e-10


@dataclass(frozen=True, eq=False)
class OracleSolution:
    x: np.ndarray
    objective: float
    unique: bool

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x)


def _fit_tol(y):
    return FIT_TOL * max(1.0, float(np.linalg.norm(y)))


def _polish(A, y, x):
    """Zero round-off entries, then re-solve on the surviving support."""
    x = np.asarray(x, dtype=np.float64).copy()
    scale = np.abs(x).max() if x.size else 0.0
    x[np.abs(x) <= _ZERO_REL * scale] = 0.0
    supp = np.flatnonzero(x)
    if supp.size:
        c, *_ = np.linalg.lstsq(A[:, supp], y, rcond=None)
        x[:] = 0.0
        x[supp] = c
    return x


def sparsest_solution(A, y) -> OracleSolution:
    """Exhaustive minimum-l0 solution of ``A x = y`` (``N <= 14``).

    Returns the first fitting support in lexicographic order among the
    smallest size; ``unique`` is False when another support of that size
    also fits.
    """
    A = as_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    M, N = A.shape
    if N > P0_MAX_N:
        raise TooLarge(f"sparsest_solution enumerates 2^N supports; N={N} > {P0_MAX_N}")
    tol = _fit_tol(y)
    if np.linalg.norm(y) <= tol:
        return OracleSolution(np.zeros(N), 0.0, True)
    for k in range(1, N + 1):
        found = None
        count = 0
        for T in itertools.combinations(range(N), k):
            cols = list(T)
            c, *_ = np.linalg.lstsq(A[:, cols], y, rcond=None)
            if np.linalg.norm(A[:, cols] @ c - y) <= tol and np.all(c != 0):
                count += 1
                if found is None:
                    found = (cols, c)
        if found is not None:
            x = np.zeros(N)
            x[found[0]] = found[1]
            return OracleSolution(x, float(k), count == 1)
    raise Infeasible("no support reproduces y")


def _sign_pattern(x):
    return tuple(np.sign(x).astype(int))


def l1_min_solution(A, y) -> OracleSolution:
    """Exhaustive minimum-l1 solution of ``A x = y`` over all basic solutions.

    ``unique`` is False when a basic solution with a different sign pattern
    comes within ``1e-8`` of the optimal objective.
    """
    A = as_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    M, N = A.shape
    if N > P1_MAX_N:
        raise TooLarge(f"l1_min_solution enumerates C(N, M) bases; N={N} > {P1_MAX_N}")
    if M >= N:
        raise TooLarge("l1_min_solution expects an under-determined system (M < N)")
    supports = np.array(list(itertools.combinations(range(N), M)), dtype=np.intp)
    blocks = np.transpose(A[:, supports], (1, 0, 2))  # (C, M, M)
    sv = np.linalg.svd(blocks, compute_uv=False)
    ok = sv[:, -1] > RANK_TOL * sv[:, 0]
    if not np.any(ok):
        raise Degenerate("every M x M column submatrix is singular")
    supports, blocks = supports[ok], blocks[ok]
    coefs = np.linalg.solve(blocks, np.broadcast_to(y, (len(blocks), M))[..., None])[..., 0]
    objs = np.abs(coefs).sum(axis=1)
    best = int(np.argmin(objs))  # argmin returns the first, i.e. lexicographic, minimizer

    x = np.zeros(N)
    x[supports[best]] = coefs[best]
    x = _polish(A, y, x)
    pattern = _sign_pattern(x)
    unique = True
    for idx in np.flatnonzero(objs <= objs[best] + TIE_TOL):
        cand = np.zeros(N)
        cand[supports[idx]] = coefs[idx]
        cand = _polish(A, y, cand)
        if _sign_pattern(cand) != pattern:
            unique = False
            break
    return OracleSolution(x, float(np.abs(x).sum()), unique)


def basic_solutions(A, y):
    """Yield ``(support, x)`` for every invertible ``M``-column submatrix."""
    A = as_matrix(A)
    M, N = A.shape
    for T in itertools.combinations(range(N), M):
        sub = A[:, list(T)]
        s = np.linalg.svd(sub, compute_uv=False)
        if s[-1] <= RANK_TOL * s[0]:
            continue
        x = np.zeros(N)
        x[list(T)] = np.linalg.solve(sub, y)
        yield T, x


def cross_validate(A, y) -> tuple[OracleSolution, OracleSolution, bool | None]:
    """Solve P0 and P1 and compare them when the coherence condition holds.

    Returns ``(p0, p1, agree)``; ``agree`` is None when ``S < 1/(3 mu(A))``
    fails for the sparsest objective ``S``, since agreement is then not
    guaranteed.
    """
    from .theory import coherence

    p0 = sparsest_solution(A, y)
    p1 = l1_min_solution(A, y)
    mu = coherence(A)
    if mu > 0 and not p0.objective < 1.0 / (3.0 * mu):
        return p0, p1, None
    agree = bool(np.max(np.abs(p0.x - p1.x)) <= 1e-8)
    return p0, p1, agree


def g_value(x, x_star) -> float:
    """``(||x||_1 - ||x*||_1) / ||x - x*||_2``."""
    x = np.asarray(x, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    dist = np.linalg.norm(x - x_star)
    if dist == 0:
        raise DegenerateInput("g is undefined at x = x*")
    return float((np.abs(x).sum() - np.abs(x_star).sum()) / dist)


def G_value(u, x_star, support_I=None):
    """``u_I . sgn(x*_I) + ||u_{I^c}||_1`` for unit ``u``.

    ``u`` may be a single vector or an array of row vectors; ``support_I``
    defaults to the nonzero pattern of ``x_star``.
    """
    u = np.asarray(u, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    norms = np.linalg.norm(u, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise DegenerateInput("G is defined for unit vectors only")
    on = np.zeros(x_star.shape, dtype=bool)
    if support_I is None:
        on[np.flatnonzero(x_star)] = True
    else:
        on[np.asarray(support_I, dtype=np.intp)] = True
    val = (u * np.where(on, np.sign(x_star), 0.0)).sum(axis=-1)
    val = val + (np.abs(u) * ~on).sum(axis=-1)
    return float(val) if np.ndim(val) == 0 else val
