"""Static SVG line charts for experiment reports."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# reproducible element ids and no creation date in the output
plt.rcParams["svg.hashsalt"] = "zapcs"
_META = {"Date": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def _finite(v):
    v = np.asarray(v, dtype=float)
    return np.where(np.isfinite(v), v, np.nan)


def report_svg(report, path) -> None:
    cfg = report.config
    fig, ax = plt.subplots(figsize=(6, 4))
    if cfg.experiment in ("PhaseM", "PhaseS"):
        xname = "M" if cfg.experiment == "PhaseM" else "S"
        x = report.column(xname)
        for name in cfg.solvers:
            ax.plot(x, report.column(f"{name}_prob"), marker="o", label=name)
        ax.set_xlabel(xname)
        ax.set_ylabel(f"P(recovery SNR >= {cfg.exact_recovery_threshold_db:g} dB)")
        ax.set_ylim(-0.02, 1.02)
    elif cfg.experiment == "SnrSweep":
        x = report.column("snr_db")
        for name in cfg.solvers:
            ax.plot(x, _finite(report.column(f"{name}_mean_snr_db")), marker="o", label=name)
        ax.set_xlabel("measurement SNR (dB)")
        ax.set_ylabel("reconstruction SNR (dB)")
    else:  # StepNoiseGrid
        snr = report.column("snr_db")
        gam = report.column("gamma")
        for name in cfg.solvers:
            for level in dict.fromkeys(snr):
                sel = snr == level
                label = f"{name}, SNR={'inf' if math.isinf(level) else f'{level:g}'} dB"
                ax.plot(gam[sel], _finite(report.column(f"{name}_mean_snr_db")[sel]), marker="o", label=label)
        ax.set_xscale("log")
        ax.set_xlabel("step size gamma")
        ax.set_ylabel("reconstruction SNR (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(f"{cfg.experiment}, N={cfg.N}, {cfg.trials} trials")
    _save(fig, path)


def bound_compare_svg(result, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    it = result.iterations
    ax.plot(it, result.actual, label="actual", lw=1.5)
    ax.plot(it, result.adaptive, label="adaptive mu", lw=1.2)
    for mu, vals in result.const.items():
        ax.plot(it, vals, label=f"mu={mu:g}", lw=1.0, ls="--")
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("||x_n - x*||_2")
    tag = "certified" if result.certified else "estimated constants (not certified)"
    ax.set_title(f"deviation and bound sequences, {tag}", fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def mu_trace_svg(result, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    sel = np.isfinite(result.mu_minus_1) & (result.mu_minus_1 > 0)
    ax.plot(result.iterations[sel], result.mu_minus_1[sel])
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("mu_n - 1")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)
