"""Command-line front end.

    zapcs gen OUT --M 80 --N 200 --S 10 --seed 1
    zapcs solve OUT --gamma 5e-4
    zapcs analyze OUT
    zapcs oracle SMALL_DIR
    zapcs bench PhaseM --seed 7 --out results/ --M 40:120:10

Exit status is 0 on success, 2 for invalid input or configuration and 3 for
numerical failures (rank deficiency, non-unique minimizers, ...).
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .errors import ConfigError, NumericalError
from .signals import (
    RecoveryProblem,
    add_noise,
    derive_seed,
    gen_compressible_signal,
    gen_gaussian_matrix,
    load_problem,
    make_problem,
    save_problem,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_LIST_FIELDS = {"M": int, "S": int, "snr_db": float, "gamma": float, "mu": float, "solvers": str}
_SCALAR_FIELDS = {
    "N": int,
    "trials": int,
    "master_seed": int,
    "exact_recovery_threshold_db": float,
    "alpha": float,
    "max_iters": int,
    "plateau_window": int,
    "plateau_tol": float,
    "workers": int,
    "experiment": str,
}


def parse_list(text: str, kind=float) -> tuple:
    """Comma-separated values; an item ``a:b:step`` expands to ``a, a+step, ..., <= b``."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if kind is not str and item.count(":") == 2:
            a, b, step = (kind(v) for v in item.split(":"))
            if step <= 0 or b < a:
                raise ConfigError(f"bad range {item!r}")
            n = int(math.floor((b - a) / step + 1e-9))
            out.extend(kind(a + i * step) for i in range(n + 1))
        else:
            out.append(kind(item))
    if not out:
        raise ConfigError(f"empty list {text!r}")
    return tuple(out)


def _convert(key, value):
    try:
        if key in _LIST_FIELDS:
            return parse_list(value, _LIST_FIELDS[key])
        if key in _SCALAR_FIELDS:
            return _SCALAR_FIELDS[key](value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    raise ConfigError(f"unknown config key {key!r}")


def load_config_file(path) -> dict:
    try:
        kv = io.read_keyvalue(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return {k: _convert(k, v) for k, v in kv.items()}


# -- subcommands ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.p is not None:
        if args.R is None:
            raise ConfigError("--p needs --R")
        A = gen_gaussian_matrix(args.M, args.N, derive_seed(args.seed, 0))
        sig = gen_compressible_signal(args.N, args.p, args.R, derive_seed(args.seed, 1))
        y, eps = add_noise(A @ sig.values, args.snr_db, derive_seed(args.seed, 2))
        meta = {"seed": args.seed, "epsilon": eps, "snr_db": args.snr_db}
        prob = RecoveryProblem(A=A, y=y, truth=sig, epsilon=eps, meta=meta)
    else:
        if args.S is None:
            raise ConfigError("gen needs --S (sparse) or --p/--R (compressible)")
        prob = make_problem(args.M, args.N, args.S, args.seed, args.snr_db)
    save_problem(args.out, prob)
    print(f"wrote {args.out}: M={args.M} N={args.N} epsilon={io.fmt(prob.epsilon)}")
    return EXIT_OK


def cmd_solve(args) -> int:
    from .zap import AttractingTerm, SolverConfig, solve

    prob = load_problem(args.problem)
    term = AttractingTerm.l1() if args.variant == "l1" else AttractingTerm.l0(args.alpha)
    try:
        cfg = SolverConfig(
            gamma=args.gamma,
            max_iters=args.max_iters,
            plateau_window=args.plateau_window,
            plateau_tol=args.plateau_tol,
            attracting=term,
            record_every=args.record_every,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    traj = solve(prob, cfg, reference=prob.x_true)
    out = Path(args.out) if args.out else Path(args.problem)
    traj.save(out)
    msg = f"{traj.stop_reason} after {traj.n_iters} iterations, residual {traj.residual[-1]:.3e}"
    if prob.x_true is not None:
        from .bench.experiments import reconstruction_snr

        msg += f", reconstruction SNR {reconstruction_snr(prob.x_true, traj.final):.2f} dB"
    print(msg)
    return EXIT_OK


def _reference_solution(prob):
    from .oracle import P1_MAX_N, l1_min_solution

    M, N = prob.A.shape
    if N <= P1_MAX_N and M < N and prob.epsilon == 0:
        return l1_min_solution(prob.A, prob.y).x, "l1_oracle"
    if prob.x_true is None:
        raise ConfigError("analyze needs truth.csv or a problem small enough for the l1 oracle")
    return prob.x_true, "truth"


def cmd_analyze(args) -> int:
    from .theory import check_conditions, instance_constants

    prob = load_problem(args.problem)
    S = args.S
    if S is None:
        if prob.x_true is None:
            raise ConfigError("--S is required when the problem has no truth")
        S = int(np.count_nonzero(prob.x_true))
    rep = check_conditions(prob.A, S)
    x_star, source = _reference_solution(prob)
    tc = instance_constants(prob.A, x_star, mu=args.mu, mode=args.mode, trials=args.trials, seed=args.seed)
    items = {"S": S, "x_star": source}
    items.update({k: v for k, v in dataclasses.asdict(rep).items()})
    out = Path(args.out) if args.out else Path(args.problem) / "analysis"
    tc.to_keyvalue(out)
    with open(out, "a") as fh:
        for k, v in items.items():
            fh.write(f"{k}={io.fmt(v) if isinstance(v, float) else v}\n")
    print(out.read_text(), end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import cross_validate

    prob = load_problem(args.problem)
    p0, p1, agree = cross_validate(prob.A, prob.y)
    out = Path(args.out) if args.out else Path(args.problem)
    out.mkdir(parents=True, exist_ok=True)
    io.write_vector(out / "p0.csv", p0.x)
    io.write_vector(out / "p1.csv", p1.x)
    summary = {
        "p0_objective": p0.objective,
        "p0_unique": p0.unique,
        "p1_objective": p1.objective,
        "p1_unique": p1.unique,
        "agree": "n/a" if agree is None else agree,
    }
    io.write_keyvalue(out / "oracle", summary)
    print((out / "oracle").read_text(), end="")
    return EXIT_OK


def _bench_config(args):
    from .bench.experiments import PRESETS, ExperimentConfig

    kw = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
        kw.update(PRESETS[args.preset])
    if args.config:
        kw.update(load_config_file(args.config))
    for key in list(_LIST_FIELDS) + list(_SCALAR_FIELDS):
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = _convert(key, val)
    kw["experiment"] = args.experiment
    kw["master_seed"] = args.seed
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def cmd_bench(args) -> int:
    from .bench.bounds import run_bound_compare
    from .bench.experiments import run_experiment

    cfg = _bench_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    (out / "timestamp").write_text(stamp + "\n")
    if cfg.experiment == "BoundCompare":
        res = run_bound_compare(
            cfg.N, cfg.M[0], cfg.S[0], cfg.gamma[0], cfg.mu, cfg.master_seed,
            estimate=args.estimate, max_iters=cfg.max_iters, out_dir=out,
        )
        print(f"wrote {out / 'bound_compare.csv'} ({len(res.iterations)} rows, certified={res.certified})")
        return EXIT_OK
    if cfg.experiment == "SolveOne":
        from .zap import AttractingTerm, SolverConfig, solve

        prob = make_problem(cfg.M[0], cfg.N, cfg.S[0], cfg.master_seed, cfg.snr_db[0])
        save_problem(out / "problem", prob)
        term = AttractingTerm.l0(cfg.alpha) if cfg.solvers[0] == "ZapL0" else AttractingTerm.l1()
        g = cfg.gamma[0]
        sc = SolverConfig(gamma=g, max_iters=cfg.iteration_cap(g), plateau_window=cfg.plateau_window,
                          plateau_tol=cfg.plateau_tol, attracting=term)
        traj = solve(prob, sc, reference=prob.x_true)
        traj.save(out)
        print(f"{traj.stop_reason} after {traj.n_iters} iterations")
        return EXIT_OK
    report = run_experiment(cfg)
    name = cfg.experiment.lower()
    report.to_csv(out / f"{name}.csv")
    report.to_svg(out / f"{name}.svg")
    print(f"wrote {out / (name + '.csv')} ({len(report.rows)} rows)")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .bench.experiments import EXPERIMENTS

    p = argparse.ArgumentParser(prog="zapcs", description="Zero-point attracting projection for sparse recovery.")
    p.add_argument("--version", action="version", version=f"zapcs {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a seeded problem directory")
    g.add_argument("out")
    g.add_argument("--M", type=int, required=True)
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--S", type=int)
    g.add_argument("--p", type=float, help="compressible decay exponent (with --R)")
    g.add_argument("--R", type=float)
    g.add_argument("--snr-db", dest="snr_db", type=float, default=math.inf)
    g.add_argument("--seed", type=int, required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run ZAP on a problem directory")
    s.add_argument("problem")
    s.add_argument("--out", help="output directory (default: the problem directory)")
    s.add_argument("--gamma", type=float, default=5e-4)
    s.add_argument("--max-iters", dest="max_iters", type=int, default=100_000)
    s.add_argument("--variant", choices=("l1", "l0"), default="l1")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--plateau-window", dest="plateau_window", type=int, default=200)
    s.add_argument("--plateau-tol", dest="plateau_tol", type=float, default=1.5)
    s.add_argument("--record-every", dest="record_every", type=int, default=100)
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("analyze", help="matrix conditions and derived constants")
    a.add_argument("problem")
    a.add_argument("--S", type=int)
    a.add_argument("--mu", type=float, default=2.0)
    a.add_argument("--mode", choices=("auto", "exact", "sampled"), default="auto")
    a.add_argument("--trials", type=int, default=10_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("oracle", help="exhaustive sparsest and minimum-l1 solutions")
    o.add_argument("problem")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run a seeded experiment grid")
    b.add_argument("experiment", choices=EXPERIMENTS)
    b.add_argument("--seed", type=int, required=True, help="master seed (required)")
    b.add_argument("--out", required=True)
    b.add_argument("--preset")
    b.add_argument("--config", help="key=value file with experiment fields")
    b.add_argument("--N", type=int)
    b.add_argument("--M", help="list or a:b:step range")
    b.add_argument("--S")
    b.add_argument("--snr-db", dest="snr_db")
    b.add_argument("--gamma")
    b.add_argument("--mu")
    b.add_argument("--solvers")
    b.add_argument("--trials", type=int)
    b.add_argument("--threshold", dest="exact_recovery_threshold_db", type=float)
    b.add_argument("--alpha", type=float)
    b.add_argument("--max-iters", dest="max_iters", type=int)
    b.add_argument("--plateau-window", dest="plateau_window", type=int)
    b.add_argument("--plateau-tol", dest="plateau_tol", type=float)
    b.add_argument("--workers", type=int)
    b.add_argument("--estimate", action="store_true", help="BoundCompare with sampled constants")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"zapcs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"zapcs: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
