"""Figure rendering for the report paths; PNG files land next to the CSVs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def density_grid_figure(xs, values, path: str, label: str = "fitted density") -> str:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(xs, values, lw=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(label)
    return _finish(fig, path)


def penalty_sweep_figure(ps, penalties, factors, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(ps, penalties, lw=1.2, label="leave-p-out penalty")
    ax.set_xlabel("p")
    ax.set_ylabel("penalty")
    ax2 = ax.twinx()
    ax2.plot(ps, factors, lw=1.2, color="tab:red", label="overpenalization factor")
    ax2.set_ylabel("C_over(p)", color="tab:red")
    ax.legend(loc="upper left")
    return _finish(fig, path)


def risk_curve_figure(dims, risks, chosen_dim, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(dims, risks, marker="o", ms=3, lw=1.0)
    ax.axvline(chosen_dim, color="tab:red", lw=1.0, ls="--", label=f"chosen D={chosen_dim}")
    ax.set_xlabel("model dimension")
    ax.set_ylabel("leave-p-out risk")
    ax.legend()
    return _finish(fig, path)


def oracle_ratio_figure(rows, path: str) -> str:
    ns = [r["n"] for r in rows]
    ratios = [r["ratio"] for r in rows]
    halves = [r["ratio_ci_halfwidth"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.errorbar(ns, ratios, yerr=halves, marker="o", ms=4, lw=1.0, capsize=3)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n")
    ax.set_ylabel("risk ratio vs oracle")
    return _finish(fig, path)


def adaptivity_figure(rows, slope, intercept, path: str) -> str:
    import numpy as np

    ns = np.array([r["n"] for r in rows], dtype=float)
    means = np.array([r["mean_loss"] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.loglog(ns, means, marker="o", ms=4, lw=0.0, label="mean risk")
    ax.loglog(ns, np.exp(intercept) * ns ** slope, lw=1.0,
              label=f"fit slope {slope:+.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("mean squared risk")
    ax.legend()
    return _finish(fig, path)
