"""Figure rendering for the report paths.

Every function takes an output path and writes the figure there (format from
the extension); nothing is shown interactively. The data views match the
delimited reports one-to-one: per-level model curves with measured error
bars, stacked per-rank load balance, and the rank-pair traffic matrix.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .model import PredictionReport
from .topology import PatternMatrix
from .validation import LevelStats, LoadBalanceReport

PATTERN_PLOT_GUARD = 8192

VARIANT_STYLES = {
    "baseline": dict(color="tab:blue", marker="o"),
    "distance": dict(color="tab:orange", marker="s"),
    "bandwidth_penalty": dict(color="tab:green", marker="^"),
    "alpha_penalty": dict(color="tab:red", marker="v"),
    "gamma_penalty": dict(color="tab:purple", marker="D"),
    "full_penalty": dict(color="tab:brown", marker="x"),
}


def plot_predictions(report: PredictionReport, path: str | Path,
                     stats: list[LevelStats] | None = None) -> Path:
    """Per-level times, one curve per model variant, optionally overlaid with
    the measured mean +- one standard deviation in black."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    levels = [row.level for row in report.rows]
    for variant in report.variants:
        times = [row.times[variant] for row in report.rows]
        style = VARIANT_STYLES.get(variant.key, {})
        ax.plot(levels, times, label=variant.key.replace("_", " "),
                markersize=4, **style)
    if stats:
        by_level = {s.level: s for s in stats}
        xs = [lvl for lvl in levels if lvl in by_level]
        means = [by_level[lvl].mean for lvl in xs]
        errs = [by_level[lvl].stddev for lvl in xs]
        ax.errorbar(xs, means, yerr=errs, color="black", marker=".",
                    capsize=3, label="measured")
    ax.set_xlabel("tree level")
    ax.set_ylabel("time (s)")
    positive = [t for row in report.rows for t in row.times.values() if t > 0]
    if positive:
        ax.set_yscale("log")
    ax.set_title(f"{report.machine.name}, P={report.num_processes}, "
                 f"N/P={report.particles_per_process}")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_load_balance(report: LoadBalanceReport, path: str | Path) -> Path:
    """Stacked per-level areas over ranks sorted by total time."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    x = np.arange(len(report.ranks))
    layers = [np.array(report.series[key]) for key in sorted(
        report.series, key=lambda k: (k[0], k[1].value))]
    labels = [f"{key[1].value} L{key[0]}" for key in sorted(
        report.series, key=lambda k: (k[0], k[1].value))]
    ax.stackplot(x, layers, labels=labels)
    ax.set_xlabel("rank (sorted by total time)")
    ax.set_ylabel("time (s)")
    ax.legend(fontsize=7, ncol=2)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_pattern(matrix: PatternMatrix, path: str | Path) -> Path:
    """Rank-pair traffic heatmap; black cells mean no messages."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    dense = matrix.to_dense(max_ranks=PATTERN_PLOT_GUARD)
    ax.imshow(dense, cmap="inferno", origin="lower", interpolation="nearest")
    ax.set_xlabel("destination rank")
    ax.set_ylabel("source rank")
    ax.set_title(f"level {matrix.level}, {matrix.phase.value}")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
