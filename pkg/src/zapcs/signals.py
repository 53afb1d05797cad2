"""Seeded generators for measurement matrices, signals and measurement noise.

All randomness comes from a counter-based Philox generator keyed by a
64-bit seed, so a given ``(parameters, seed)`` pair always produces the same
arrays. Experiments derive per-trial seeds with :func:`derive_seed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .errors import DimensionMismatch, InvalidSparsity, RankDeficient, ZeroSignal
from .linalg import RANK_TOL

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


def derive_seed(master: int, k: int) -> int:
    """Seed of the ``k``-th child stream: ``master XOR (k + 1) * GOLDEN`` mod 2**64."""
    return (int(master) ^ ((k + 1) * GOLDEN)) & MASK64


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & MASK64))


@dataclass(frozen=True, eq=False)
class SparseSignal:
    values: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        nnz = np.flatnonzero(self.values)
        if not np.array_equal(nnz, np.sort(self.support)):
            raise InvalidSparsity("nonzero pattern does not match the declared support")
        if abs(np.linalg.norm(self.values) - 1.0) > 1e-12:
            raise ValueError("sparse signal must have unit l2 norm")

    @property
    def S(self) -> int:
        return len(self.support)


@dataclass(frozen=True, eq=False)
class CompressibleSignal:
    values: np.ndarray
    p: float
    R: float

    def __post_init__(self):
        mags = np.sort(np.abs(self.values))[::-1]
        envelope = self.R * np.arange(1, len(mags) + 1) ** (-1.0 / self.p)
        if np.any(mags > envelope * (1 + 1e-12)):
            raise ValueError("signal violates the p-compressible envelope")


@dataclass(frozen=True, eq=False)
class RecoveryProblem:
    """Measurements ``y`` of an optional ground truth through ``A``.

    ``epsilon`` bounds the measurement noise energy ``||y - A truth||_2``.
    """

    A: np.ndarray
    y: np.ndarray
    truth: SparseSignal | CompressibleSignal | None = None
    epsilon: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.y.shape != (self.A.shape[0],):
            raise DimensionMismatch(f"y shape {self.y.shape} does not match A {self.A.shape}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.truth is not None:
            res = np.linalg.norm(self.y - self.A @ self.truth.values)
            tol = self.epsilon * (1 + 1e-9) if self.epsilon > 0 else 1e-10
            if res > max(tol, 1e-10):
                raise ValueError(f"residual {res:.3e} exceeds noise bound {self.epsilon:.3e}")

    @property
    def x_true(self) -> np.ndarray | None:
        return None if self.truth is None else self.truth.values


def gen_gaussian_matrix(M: int, N: int, seed: int) -> np.ndarray:
    """``M x N`` matrix with i.i.d. ``N(0, 1/M)`` entries.

    Rows are drawn in order, so for a fixed seed the matrix for ``M`` is the
    first ``M`` rows of the matrix for any larger ``M`` (up to the 1/sqrt(M)
    scaling). A rank-deficient draw is retried with a derived seed, at most
    three times.
    """
    if not 1 <= M <= N:
        raise DimensionMismatch(f"need 1 <= M <= N, got M={M}, N={N}")
    s = seed
    for attempt in range(4):
        A = rng_for(s).standard_normal((M, N)) / math.sqrt(M)
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] > RANK_TOL * sv[0]:
            return A
        s = derive_seed(seed, 1000 + attempt)
    raise RankDeficient(f"could not draw a full-row-rank {M}x{N} matrix from seed {seed}")


def gen_sparse_signal(N: int, S: int, seed: int) -> SparseSignal:
    if not 1 <= S <= N:
        raise InvalidSparsity(f"need 1 <= S <= N, got S={S}, N={N}")
    rng = rng_for(seed)
    support = np.sort(rng.choice(N, size=S, replace=False))
    x = np.zeros(N)
    vals = rng.standard_normal(S)
    while np.any(vals == 0.0):  # keeps the support exact
        vals[vals == 0.0] = rng.standard_normal(np.count_nonzero(vals == 0.0))
    x[support] = vals
    x /= np.linalg.norm(x)
    return SparseSignal(values=x, support=support)


def gen_compressible_signal(N: int, p: float, R: float, seed: int) -> CompressibleSignal:
    """Signal whose i-th largest magnitude is exactly ``R * i**(-1/p)``."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    rng = rng_for(seed)
    mags = R * np.arange(1, N + 1, dtype=np.float64) ** (-1.0 / p)
    signs = rng.choice(np.array([-1.0, 1.0]), size=N)
    perm = rng.permutation(N)
    x = np.empty(N)
    x[perm] = signs * mags
    return CompressibleSignal(values=x, p=float(p), R=float(R))


def add_noise(y, target_snr_db: float, seed: int) -> tuple[np.ndarray, float]:
    """Add white Gaussian noise scaled so the realized SNR equals the target.

    Returns the noisy vector and the realized noise energy ``||e||_2``.
    ``target_snr_db = inf`` returns ``y`` unchanged with zero energy.
    """
    y = np.asarray(y, dtype=np.float64)
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        raise ZeroSignal("cannot set an SNR relative to a zero measurement vector")
    if math.isinf(target_snr_db) and target_snr_db > 0:
        return y.copy(), 0.0
    e = rng_for(seed).standard_normal(y.shape)
    eps = ynorm * 10.0 ** (-target_snr_db / 20.0)
    e *= eps / np.linalg.norm(e)
    return y + e, float(np.linalg.norm(e))


def best_s_approx(x, S: int) -> tuple[np.ndarray, float, float]:
    """Keep the ``S`` largest-magnitude entries (ties go to the lower index).

    Returns ``(x_S, ||x - x_S||_1, ||x - x_S||_2)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if not 1 <= S <= x.size:
        raise InvalidSparsity(f"need 1 <= S <= N, got S={S}, N={x.size}")
    keep = np.argsort(-np.abs(x), kind="stable")[:S]
    xs = np.zeros_like(x)
    xs[keep] = x[keep]
    tail = x - xs
    return xs, float(np.abs(tail).sum()), float(np.linalg.norm(tail))


def tail_constants(p: float) -> tuple[float, float]:
    """``(C_p, D_p) = ((1/p - 1)^-1, (2/p - 1)^-1/2)`` for the compressible tail bounds."""
    return 1.0 / (1.0 / p - 1.0), (2.0 / p - 1.0) ** -0.5


def make_problem(
    M: int, N: int, S: int, seed: int, snr_db: float = math.inf
) -> RecoveryProblem:
    """Draw a Gaussian matrix, an ``S``-sparse unit signal and (optionally) noise.

    Matrix, signal and noise use independent child streams of ``seed``.
    """
    A = gen_gaussian_matrix(M, N, derive_seed(seed, 0))
    sig = gen_sparse_signal(N, S, derive_seed(seed, 1))
    y_clean = A @ sig.values
    y, eps = add_noise(y_clean, snr_db, derive_seed(seed, 2))
    meta = {"seed": seed, "S": S, "epsilon": eps, "snr_db": snr_db}
    return RecoveryProblem(A=A, y=y, truth=sig, epsilon=eps, meta=meta)


def save_problem(directory, problem: RecoveryProblem) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    io.write_matrix(d / "A.csv", problem.A)
    io.write_vector(d / "y.csv", problem.y)
    if problem.truth is not None:
        io.write_vector(d / "truth.csv", problem.truth.values)
    meta = dict(problem.meta)
    meta["epsilon"] = float(problem.epsilon)
    if isinstance(problem.truth, CompressibleSignal):
        meta.setdefault("p", problem.truth.p)
        meta.setdefault("R", problem.truth.R)
    elif isinstance(problem.truth, SparseSignal):
        meta.setdefault("S", problem.truth.S)
    io.write_keyvalue(d / "meta", meta)


def load_problem(directory) -> RecoveryProblem:
    d = Path(directory)
    A = io.read_matrix(d / "A.csv")
    y = io.read_vector(d / "y.csv")
    meta = io.read_keyvalue(d / "meta") if (d / "meta").exists() else {}
    eps = float(meta.get("epsilon", 0.0))
    truth = None
    if (d / "truth.csv").exists():
        x = io.read_vector(d / "truth.csv")
        if "p" in meta and "R" in meta:
            truth = CompressibleSignal(values=x, p=float(meta["p"]), R=float(meta["R"]))
        else:
            truth = SparseSignal(values=x, support=np.flatnonzero(x))
    return RecoveryProblem(A=A, y=y, truth=truth, epsilon=eps, meta=meta)
