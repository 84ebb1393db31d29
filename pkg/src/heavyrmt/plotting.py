"""SVG figures for the command line reports.

Figures are written with matplotlib's SVG backend; a fixed hash salt and an
empty date make the bytes reproducible across runs.
"""

from __future__ import annotations

import math
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("svg")
matplotlib.rcParams["svg.hashsalt"] = "heavyrmt"
matplotlib.rcParams["svg.fonttype"] = "path"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_METADATA = {"Date": None, "Creator": None}


def _save(fig, path) -> str:
    fig.savefig(path, format="svg", metadata=_METADATA)
    plt.close(fig)
    return str(path)


def histogram_with_normal(
    samples,
    path,
    title: str = "",
    predicted_variance: Optional[float] = None,
    bins: int = 40,
) -> str:
    """Density histogram of centred samples with fitted (and predicted) normals."""
    x = np.asarray(samples, dtype=float)
    x = x - x.mean()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(x, bins=bins, density=True, color="#9db4d3", edgecolor="#46648c", linewidth=0.5)
    grid = np.linspace(x.min(), x.max(), 400) if x.size else np.zeros(1)
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    if sd > 0:
        ax.plot(grid, np.exp(-0.5 * (grid / sd) ** 2) / (sd * math.sqrt(2 * math.pi)),
                color="#1f3b66", label=f"fitted normal, var={sd * sd:.4g}")
    if predicted_variance is not None and predicted_variance > 0:
        s = math.sqrt(predicted_variance)
        ax.plot(grid, np.exp(-0.5 * (grid / s) ** 2) / (s * math.sqrt(2 * math.pi)),
                color="#c0392b", linestyle="--", label=f"predicted, var={predicted_variance:.4g}")
    ax.set_title(title)
    ax.set_xlabel("centred statistic / sqrt(N)")
    ax.set_ylabel("density")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def line_plot(
    x,
    series: Dict[str, Sequence[float]],
    path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    markers: bool = False,
) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, y in series.items():
        ax.plot(x, y, marker="o" if markers else None, markersize=3, label=name)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
