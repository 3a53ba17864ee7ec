"""Matplotlib figures for experiment reports.

Figures are written with fixed metadata so re-rendering the same data
produces identical files.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

REPORT_RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "svg.hashsalt": "micmac",
}

_PNG_META = {"Software": None}


@contextmanager
def report_style():
    with plt.rc_context(REPORT_RC):
        yield


def golden_figsize(width: float = 7.0) -> tuple[float, float]:
    return width, width * (np.sqrt(5.0) - 1.0) / 2.0


def plot_accuracy_curves(curves: Mapping[str, tuple], path, mark_k: int | None = 12) -> None:
    """Mean subject-level accuracy against the number of top-ranked features.

    ``curves`` maps scheme name to ``(k, mean, std)`` arrays; the std is drawn
    as a translucent band.
    """
    if not curves:
        raise ValueError("no results")
    with report_style():
        fig, ax = plt.subplots(figsize=golden_figsize())
        for name, (k, mean, std) in curves.items():
            k, mean, std = map(np.asarray, (k, mean, std))
            line, = ax.plot(k, mean, label=name)
            ax.fill_between(k, np.clip(mean - std, 0, 1), np.clip(mean + std, 0, 1),
                            color=line.get_color(), alpha=0.12, linewidth=0)
        if mark_k:
            ax.axvline(mark_k, color="0.6", linestyle=":", linewidth=1)
        ax.set_xlabel("number of features")
        ax.set_ylabel("subject-level accuracy")
        ax.set_ylim(0, 1.02)
        ax.legend(loc="lower right", frameon=False, ncol=2)
        fig.tight_layout()
        fig.savefig(path, metadata=_PNG_META)
        plt.close(fig)


def plot_summary_bars(rows, path) -> None:
    """Best-selection and top-12 accuracy per scheme, with across-experiment std."""
    if not rows:
        raise ValueError("no results")
    names = [r["scheme"] for r in rows]
    x = np.arange(len(names))
    with report_style():
        fig, ax = plt.subplots(figsize=(max(5.0, 0.9 * len(names) + 2), 4.0))
        ax.bar(x - 0.2, [r["best_acc"] for r in rows], 0.4, yerr=[r["best_acc_std"] for r in rows],
               label="best selection", capsize=2)
        ax.bar(x + 0.2, [r["top12_acc"] for r in rows], 0.4, yerr=[r["top12_std"] for r in rows],
               label="top-12 selection", capsize=2)
        for xi, r in zip(x, rows):
            ax.text(xi - 0.2, 0.02, f"({r['best_k']})", ha="center", va="bottom", fontsize=7, color="white")
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylabel("subject-level accuracy")
        ax.set_ylim(0, 1.05)
        ax.legend(frameon=False, loc="upper right")
        fig.tight_layout()
        fig.savefig(path, metadata=_PNG_META)
        plt.close(fig)
