"""Matplotlib renderings of profile curves and metric sweeps (PNG)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .profiles import ProfileCurve  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "svg.hashsalt": "xg",
}


def _save(fig, path):
    # no Software/date metadata so reruns write identical files
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def plot_profiles(curves: Sequence[ProfileCurve], path, title: str = "") -> Path:
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for curve in curves:
            if curve.grid.kind == "continuous":
                ax.plot(curve.grid.points, curve.values, label=f"{curve.group_label} (k={curve.k})")
            else:
                ax.plot(range(len(curve.grid.points)), curve.values, marker="o",
                        label=f"{curve.group_label} (k={curve.k})")
                ax.set_xticks(range(len(curve.grid.points)))
                ax.set_xticklabels(curve.grid.points, rotation=30, ha="right")
        ax.set_ylim(0, 1)
        ax.set_xlabel(curves[0].feature if curves else "feature value")
        ax.set_ylabel("average xG per shot")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)


def plot_metric_sweep(rows: Sequence[dict], path,
                      metrics=("recall", "precision", "balanced_accuracy", "mcc", "brier")) -> Path:
    """Grouped bars: one group per metric, one bar per (model, sampling) row."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7.0, 3.6))
        width = 0.8 / max(len(rows), 1)
        for i, row in enumerate(rows):
            xs = [j + i * width for j in range(len(metrics))]
            ax.bar(xs, [row[m] for m in metrics], width=width, label=f"{row['model']} / {row['sampling']}")
        ax.set_xticks([j + 0.4 - width / 2 for j in range(len(metrics))])
        ax.set_xticklabels(metrics)
        ax.set_ylim(0, 1)
        ax.legend(loc="upper right")
        fig.tight_layout()
        return _save(fig, path)
