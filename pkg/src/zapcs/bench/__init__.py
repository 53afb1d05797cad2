"""Experiment harness: seeded grids, bound comparisons and the OMP baseline."""

from .baseline import omp_baseline
from .bounds import BoundCompareResult, run_bound_compare
from .experiments import (
    EXPERIMENTS,
    PRESETS,
    SOLVERS,
    ExperimentConfig,
    ExperimentReport,
    preset,
    reconstruction_snr,
    run_experiment,
)

__all__ = [
    "EXPERIMENTS",
    "PRESETS",
    "SOLVERS",
    "BoundCompareResult",
    "ExperimentConfig",
    "ExperimentReport",
    "omp_baseline",
    "preset",
    "reconstruction_snr",
    "run_bound_compare",
    "run_experiment",
]
