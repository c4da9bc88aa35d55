"""Figure rendering for CLI reports.

Every report subcommand can render a small set of diagnostic figures
next to its delimited output.  All plots are per-vertex scatters
against level, plus a convergence trace for the operator-norm power
iteration and a heatmap for kernels.  Files are PNG, written into the
directory handed to ``--figures``.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tree import Tree

__all__ = [
    "vertex_scatter",
    "convergence_plot",
    "kernel_heatmap",
    "norms_bar",
]


def _finish(fig, outdir: str | Path, name: str) -> Path:
    out = Path(outdir) / f"{name}.png"
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def vertex_scatter(
    t: Tree,
    values: np.ndarray,
    outdir: str | Path,
    name: str,
    ylabel: str,
    hline: float | None = None,
    hline_label: str | None = None,
) -> Path:
    """Scatter one value per vertex against its level."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(t.level, values, s=14, alpha=0.7)
    if hline is not None:
        ax.axhline(hline, color="tab:red", lw=1,
                   label=hline_label or f"{hline:.6g}")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("level")
    ax.set_ylabel(ylabel)
    ax.set_title(name.replace("_", " "))
    return _finish(fig, outdir, name)


def convergence_plot(history: list[float], outdir: str | Path,
                     name: str = "opnorm_history") -> Path:
    """Rayleigh-quotient trace of the power iteration."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(history) + 1), history, marker=".", lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("norm quotient")
    ax.set_title("power iteration convergence")
    return _finish(fig, outdir, name)


def kernel_heatmap(entries: np.ndarray, outdir: str | Path,
                   name: str = "kernel") -> Path:
    """Signed heatmap of a vertex-by-leaf kernel matrix."""
    fig, ax = plt.subplots(figsize=(6, 4))
    scale = float(np.abs(entries).max()) or 1.0
    im = ax.imshow(entries, aspect="auto", cmap="RdBu_r",
                   vmin=-scale, vmax=scale)
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_xlabel("leaf (depth-first order)")
    ax.set_ylabel("vertex")
    ax.set_title("kernel entries")
    return _finish(fig, outdir, name)


def norms_bar(labels: list[str], values: list[float], outdir: str | Path,
              name: str = "norms") -> Path:
    """Bar chart of a small family of norms."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("norm value")
    ax.set_title("norm family")
    return _finish(fig, outdir, name)
