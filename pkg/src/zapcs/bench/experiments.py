"""Seeded Monte-Carlo experiments: phase transitions, SNR sweeps, step-size grids.

A run is a grid over ``M x S x snr_db x gamma``. Trial ``k`` of every cell
uses the same seed ``derive_seed(master_seed, k)``, so cells differ only in
the swept parameter (for a fixed trial the ``M``-row matrix is a prefix of
the larger ones and the signal is shared). Each ``(cell, trial)`` pair is an
independent task; results are reduced in task order, so the output does not
depend on the number of workers.
"""

from __future__ import annotations

import csv
import io as _io
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__, io
from ..errors import ConfigError, ZapError, ZeroSignal
from ..linalg import build_projection
from ..signals import derive_seed, make_problem
from ..zap import AttractingTerm, SolverConfig, solve
from .baseline import omp_baseline

EXPERIMENTS = ("PhaseM", "PhaseS", "SnrSweep", "BoundCompare", "StepNoiseGrid", "SolveOne")
SOLVERS = ("ZapL1", "ZapL0", "Omp")
PROBABILITY_EXPERIMENTS = ("PhaseM", "PhaseS")

# l0 attraction width; calibrated on unit-energy signals at N=200 (not given in the source)
DEFAULT_L0_ALPHA = 1.0


def reconstruction_snr(x_true, x_hat) -> float:
    """``20 log10(||x|| / ||x - x_hat||)`` in dB; ``inf`` below an error of 1e-30."""
    x_true = np.asarray(x_true, dtype=np.float64)
    nrm = np.linalg.norm(x_true)
    if nrm == 0:
        raise ZeroSignal("reconstruction SNR needs a nonzero reference signal")
    err = np.linalg.norm(x_true - np.asarray(x_hat, dtype=np.float64))
    if err < 1e-30:
        return math.inf
    return float(20.0 * math.log10(nrm / err))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    master_seed: int
    N: int = 200
    M: tuple = (80,)
    S: tuple = (10,)
    snr_db: tuple = (math.inf,)
    gamma: tuple = (5e-4,)
    trials: int = 50
    solvers: tuple = ("ZapL1",)
    exact_recovery_threshold_db: float = 40.0
    alpha: float = DEFAULT_L0_ALPHA
    max_iters: int | None = None
    plateau_window: int = 200
    plateau_tol: float = 1.5
    mu: tuple = (1.5, 2.0, 4.0)
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        for name in ("M", "S", "snr_db", "gamma", "solvers", "mu"):
            val = getattr(self, name)
            if isinstance(val, (int, float, str)):
                val = (val,)
            object.__setattr__(self, name, tuple(val))
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        bad = set(self.solvers) - set(SOLVERS)
        if bad:
            raise ConfigError(f"unknown solver(s) {sorted(bad)}; choose from {SOLVERS}")
        if any(g <= 0 for g in self.gamma):
            raise ConfigError("gamma values must be positive")
        for M in self.M:
            if not 1 <= M <= self.N:
                raise ConfigError(f"need 1 <= M <= N, got M={M}, N={self.N}")
        for S in self.S:
            if not 1 <= S <= self.N:
                raise ConfigError(f"need 1 <= S <= N, got S={S}")

    def iteration_cap(self, gamma: float) -> int:
        """``max_iters`` if set, else ``50 / gamma`` (at least 1000)."""
        if self.max_iters is not None:
            return int(self.max_iters)
        return max(1000, int(math.ceil(50.0 / gamma)))

    def echo(self) -> dict:
        """Configuration fields that determine results (``workers`` excluded)."""
        d = asdict(self)
        d.pop("workers")
        return d

    def cells(self) -> list[tuple[int, int, float, float]]:
        return [(M, S, snr, g) for M in self.M for S in self.S for snr in self.snr_db for g in self.gamma]


def _run_trial(task):
    cfg, (M, S, snr, gamma), seed = task
    out = {}
    try:
        prob = make_problem(M, cfg.N, S, seed, snr)
    except ZapError:
        return {name: None for name in cfg.solvers}
    x_true = prob.x_true
    proj = None
    for name in cfg.solvers:
        try:
            if name == "Omp":
                x_hat = omp_baseline(prob, min(S, M))
            else:
                if proj is None:
                    proj = build_projection(prob.A)
                term = AttractingTerm.l1() if name == "ZapL1" else AttractingTerm.l0(cfg.alpha)
                sc = SolverConfig(
                    gamma=gamma,
                    max_iters=cfg.iteration_cap(gamma),
                    plateau_window=cfg.plateau_window,
                    plateau_tol=cfg.plateau_tol,
                    attracting=term,
                    record_every=cfg.iteration_cap(gamma),
                )
                x_hat = solve(prob, sc, proj=proj).final
            out[name] = reconstruction_snr(x_true, x_hat)
        except (ZapError, np.linalg.LinAlgError, FloatingPointError):
            out[name] = None
    return out


def _map_tasks(fn, tasks, workers):
    if workers == 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        chunk = max(1, len(tasks) // (4 * workers))
        return list(ex.map(fn, tasks, chunksize=chunk))


@dataclass(eq=False)
class ExperimentReport:
    config: ExperimentConfig
    columns: list
    rows: list = field(default_factory=list)

    def provenance(self) -> dict:
        d = {"code_version": f"zapcs {__version__}"}
        for k, v in self.config.echo().items():
            d[k] = ",".join(_fmt(x) for x in v) if isinstance(v, tuple) else _fmt(v)
        return d

    def to_csv_text(self) -> str:
        buf = _io.StringIO()
        for k, v in self.provenance().items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    def column(self, name) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)

    def to_svg(self, path) -> None:
        from .plots import report_svg

        report_svg(self, path)


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v)
    if isinstance(v, float):
        return io.fmt(v) if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    return str(v)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every ``(cell, trial)`` task and aggregate one row per grid cell.

    A row holds the cell parameters and, per solver, the number of trials
    reaching the exact-recovery threshold, that fraction, the mean
    reconstruction SNR over completed trials and the failure count.
    """
    if config.experiment in ("BoundCompare", "SolveOne"):
        raise ConfigError(f"{config.experiment} is not a grid experiment")
    cells = config.cells()
    seeds = [derive_seed(config.master_seed, k) for k in range(config.trials)]
    tasks = [(config, cell, seed) for cell in cells for seed in seeds]
    results = _map_tasks(_run_trial, tasks, config.workers)

    columns = ["N", "M", "S", "snr_db", "gamma", "trials"]
    for name in config.solvers:
        columns += [f"{name}_success", f"{name}_prob", f"{name}_mean_snr_db", f"{name}_failures"]
    report = ExperimentReport(config, columns)
    thr = config.exact_recovery_threshold_db
    for ci, (M, S, snr, gamma) in enumerate(cells):
        chunk = results[ci * config.trials : (ci + 1) * config.trials]
        row = {"N": config.N, "M": M, "S": S, "snr_db": float(snr), "gamma": float(gamma), "trials": config.trials}
        for name in config.solvers:
            vals = [r[name] for r in chunk]
            ok = [v for v in vals if v is not None]
            succ = sum(1 for v in ok if v >= thr)
            row[f"{name}_success"] = succ
            row[f"{name}_prob"] = succ / config.trials
            row[f"{name}_mean_snr_db"] = float(np.mean(ok)) if ok else math.nan
            row[f"{name}_failures"] = len(vals) - len(ok)
        report.rows.append(row)
    return report


# -- presets ---------------------------------------------------------------------------

PRESETS = {
    # desk-scale analogs used by the acceptance suite
    "desk-phase-m": dict(experiment="PhaseM", N=200, S=(10,), M=tuple(range(40, 121, 10)), trials=50),
    "desk-phase-s": dict(experiment="PhaseS", N=200, M=(80,), S=tuple(range(5, 31, 5)), trials=50),
    "desk-snr": dict(
        experiment="SnrSweep", N=200, M=(80,), S=(6,), snr_db=(5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
        trials=50, solvers=SOLVERS,
    ),
    "desk-step-noise": dict(
        experiment="StepNoiseGrid", N=100, M=(40,), S=(5,), gamma=(1e-2, 1e-3, 1e-4, 1e-5),
        snr_db=(20.0, 40.0, math.inf), trials=20,
    ),
    # full-scale settings (N = 1000, opt-in; not part of the acceptance suite)
    "full-phase-m": dict(
        experiment="PhaseM", N=1000, S=(50,), M=tuple(range(140, 321, 20)), trials=200, solvers=SOLVERS,
    ),
    "full-phase-s": dict(
        experiment="PhaseS", N=1000, M=(200,), S=tuple(range(25, 71, 5)), trials=200, solvers=SOLVERS,
    ),
    "full-snr": dict(
        experiment="SnrSweep", N=1000, M=(200,), S=(30,), snr_db=(5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
        trials=200, solvers=SOLVERS,
    ),
    "full-bounds": dict(experiment="BoundCompare", N=1000, M=(250,), S=(50,), gamma=(5e-4,)),
    "full-step-noise": dict(
        experiment="StepNoiseGrid", N=1000, M=(150,), S=(20,), gamma=(1e-2, 1e-3, 1e-4, 1e-5),
        snr_db=(20.0, 30.0, 40.0, math.inf), trials=100,
    ),
}


def preset(name: str, master_seed: int, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kw = dict(PRESETS[name])
    kw.update(overrides)
    return ExperimentConfig(master_seed=master_seed, **kw)


def with_workers(config: ExperimentConfig, workers: int) -> ExperimentConfig:
    return replace(config, workers=workers)
