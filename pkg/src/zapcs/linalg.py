"""Pseudo-inverse and solution-space projection for full-row-rank matrices.

Everything is built from one SVD of ``A`` (``A = W diag(s) V^T``). The first
``M`` right singular vectors span the row space of ``A``, the remaining
``N - M`` span its kernel, so

    P v  = v - V_r V_r^T v  = V_k V_k^T v
    A† r = V_r diag(1/s) W^T r

and no Gram matrix is ever inverted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, RankDeficient

RANK_TOL = 1e-10


def as_matrix(A) -> np.ndarray:
    """Validate and return ``A`` as a C-contiguous float64 ``(M, N)`` array."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if A.shape[0] > A.shape[1]:
        raise DimensionMismatch(f"expected M <= N, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DimensionMismatch("matrix has non-finite entries")
    return A


@dataclass(frozen=True, eq=False)
class ProjectionOperator:
    """Orthogonal projector onto ``ker(A)`` plus the pseudo-inverse of ``A``.

    Instances are immutable; arrays are flagged read-only.
    """

    A: np.ndarray
    left: np.ndarray  # W, (M, M)
    singular_values: np.ndarray  # s, descending, (M,)
    row_basis: np.ndarray  # V_r, (N, M)
    kernel_basis: np.ndarray  # V_k, (N, N - M)
    _dense: list = field(default_factory=list, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[1]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Return ``P v``. Accepts a vector or an ``(N, k)`` block of columns."""
        v = np.asarray(v, dtype=np.float64)
        M, N = self.shape
        if v.shape[0] != N:
            raise DimensionMismatch(f"vector length {v.shape[0]} != N = {N}")
        # cheaper of the two equivalent forms
        if M <= N - M:
            return v - self.row_basis @ (self.row_basis.T @ v)
        return self.kernel_basis @ (self.kernel_basis.T @ v)

    __call__ = apply

    def pinv_apply(self, r: np.ndarray) -> np.ndarray:
        """Return ``A† r``, the minimum-norm solution of ``A x = r``."""
        r = np.asarray(r, dtype=np.float64)
        if r.shape[0] != self.shape[0]:
            raise DimensionMismatch(f"vector length {r.shape[0]} != M = {self.shape[0]}")
        coef = (self.left.T @ r) / (
            self.singular_values if r.ndim == 1 else self.singular_values[:, None]
        )
        return self.row_basis @ coef

    def pinv(self) -> np.ndarray:
        """Dense ``A†`` of shape ``(N, M)``."""
        return (self.row_basis / self.singular_values) @ self.left.T

    def dense(self) -> np.ndarray:
        """Explicit ``N x N`` projector, cached after the first call."""
        if not self._dense:
            Q = self.kernel_basis
            P = Q @ Q.T
            P = 0.5 * (P + P.T)
            P.setflags(write=False)
            self._dense.append(P)
        return self._dense[0]


def _svd_checked(A: np.ndarray):
    W, s, Vt = np.linalg.svd(A, full_matrices=True)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient(
            f"smallest singular value {s[-1]:.3e} <= {RANK_TOL:g} x largest {s[0]:.3e}"
        )
    return W, s, Vt


def build_projection(A) -> ProjectionOperator:
    """Factor ``A`` and return the projector ``P = I - A^T (A A^T)^{-1} A``.

    Raises
    ------
    RankDeficient
        If ``sigma_min / sigma_max <= 1e-10``.
    """
    A = as_matrix(A)
    M = A.shape[0]
    W, s, Vt = _svd_checked(A)
    V = Vt.T
    arrays = [A.copy(), W, s, np.ascontiguousarray(V[:, :M]), np.ascontiguousarray(V[:, M:])]
    for arr in arrays:
        arr.setflags(write=False)
    return ProjectionOperator(*arrays)


def least_squares_point(A, y, proj: ProjectionOperator | None = None) -> np.ndarray:
    """Minimum-l2-norm solution ``A† y`` of the consistent system ``A x = y``."""
    if proj is None:
        proj = build_projection(A)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != proj.shape[0]:
        raise DimensionMismatch(f"y has shape {y.shape}, expected ({proj.shape[0]},)")
    return proj.pinv_apply(y)


def max_eig_gram_inverse(A) -> float:
    """Largest eigenvalue of ``(A A^T)^{-1}``, i.e. ``1 / sigma_min(A)^2``."""
    A = as_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient(f"smallest singular value {s[-1]:.3e} too small")
    return float(1.0 / s[-1] ** 2)
