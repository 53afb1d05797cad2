"""Sparse recovery by zero-point attracting projection (ZAP).

Submodules
----------
linalg   projector onto ker(A) and pseudo-inverse
signals  seeded matrices, sparse/compressible signals, noise
zap      the iteration engine
theory   convergence constants, bound sequences and rate bounds
oracle   brute-force P0/P1 solvers for small instances
bench    experiment harness, OMP baseline and CLI
"""

__version__ = "0.1.0"

from .errors import ZapError
from .linalg import build_projection, least_squares_point, max_eig_gram_inverse
from .signals import RecoveryProblem, make_problem
from .zap import AttractingTerm, SolverConfig, Trajectory, solve

__all__ = [
    "ZapError",
    "build_projection",
    "least_squares_point",
    "max_eig_gram_inverse",
    "RecoveryProblem",
    "make_problem",
    "AttractingTerm",
    "SolverConfig",
    "Trajectory",
    "solve",
]
