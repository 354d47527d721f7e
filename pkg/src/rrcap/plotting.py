"""Figures for benchmark runs. Rendering is headless (Agg)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Software metadata would embed the matplotlib version and break byte-identity
PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=PNG_METADATA if str(path).lower().endswith(".png") else None)
    plt.close(fig)


def scatter_fit(records, stats, path, title=None):
    """Predicted score vs. MOS with the fitted logistic overlaid."""
    pred = np.array([r.predicted for r in records])
    mos = np.array([r.mos for r in records])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(pred, mos, s=12, alpha=0.7, color="tab:blue", label="items")
    xs = np.linspace(pred.min(), pred.max(), 200)
    ax.plot(xs, stats.fit(xs), color="tab:red", lw=1.5, label="logistic fit")
    ax.set_xlabel("objective score Q")
    ax.set_ylabel("MOS")
    ax.set_title(title or f"SROCC {stats.srocc:.4f}  PLCC {stats.plcc:.4f}  RMSE {stats.rmse:.4f}", fontsize=9)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def sweep_plot(levels, series: dict, path, xlabel="distortion level", ylabel="Q"):
    """One line per named series over a shared x axis (noise or scale sweeps)."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, ys in series.items():
        ax.plot(levels, ys, marker="o", ms=3, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)
