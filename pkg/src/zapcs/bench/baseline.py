"""Orthogonal matching pursuit, the greedy comparison baseline."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch


def omp_baseline(problem, max_atoms: int, return_residuals: bool = False):
    """Greedy OMP on ``problem.A``, ``problem.y``.

    Each step picks the column most correlated with the residual (after
    normalizing columns), then refits all selected coefficients by least
    squares. Stops after ``max_atoms`` atoms or once the residual drops to
    ``1e-8 ||y||``.

    If ``return_residuals`` is set, also returns the residual norm after
    each step (starting with ``||y||``).
    """
    A, y = problem.A, problem.y
    M, N = A.shape
    if not 0 <= max_atoms <= M:
        raise DimensionMismatch(f"max_atoms must lie in [0, M={M}], got {max_atoms}")
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = np.inf
    stop = 1e-8 * np.linalg.norm(y)
    support: list[int] = []
    coef = np.zeros(0)
    r = y.copy()
    history = [float(np.linalg.norm(r))]
    while len(support) < max_atoms and history[-1] > stop:
        corr = np.abs(A.T @ r) / norms
        corr[support] = -1.0
        support.append(int(np.argmax(corr)))
        coef, *_ = np.linalg.lstsq(A[:, support], y, rcond=None)
        r = y - A[:, support] @ coef
        history.append(float(np.linalg.norm(r)))
    x = np.zeros(N)
    x[support] = coef
    if return_residuals:
        return x, history
    return x
