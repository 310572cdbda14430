"""Matplotlib figure rendering for run artifacts."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.patches import Patch

from .evaluate import CELL_NOTROCK, CELL_ROCK, CELL_UNOBSERVED, MetricsReport

_CELL_CMAP = ListedColormap([
    (255 / 255, 228 / 255, 132 / 255),  # not rock
    (180 / 255, 60 / 255, 40 / 255),    # rock
    (0.15, 0.15, 0.15),                 # unobserved
])
_CELL_NAMES = {CELL_NOTROCK: "not rock", CELL_ROCK: "rock",
               CELL_UNOBSERVED: "unobserved"}


def save_raster_figure(path: str | Path, cells: np.ndarray,
                       title: str = "predicted map") -> None:
    fig, ax = plt.subplots(figsize=(6, 6 * cells.shape[0] / max(cells.shape[1], 1)))
    ax.imshow(cells, cmap=_CELL_CMAP, vmin=0, vmax=2, origin="lower",
              interpolation="nearest")
    ax.set_title(title)
    ax.set_xlabel("x cell")
    ax.set_ylabel("y cell")
    handles = [Patch(color=_CELL_CMAP(code), label=name)
               for code, name in _CELL_NAMES.items()]
    ax.legend(handles=handles, loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_disparity_figure(path: str | Path, disparities: np.ndarray,
                          valid: np.ndarray) -> None:
    shown = np.where(valid, disparities, np.nan)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    im = ax.imshow(shown, cmap="viridis")
    fig.colorbar(im, ax=ax, label="disparity [px]")
    ax.set_title("disparity")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_comparison_figure(path: str | Path, reports: list[MetricsReport]) -> None:
    methods = sorted({r.method for r in reports})
    datasets = sorted({r.dataset for r in reports})
    by_key = {(r.method, r.dataset): r for r in reports}
    x = np.arange(len(datasets))
    width = 0.8 / max(2 * len(methods), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for mi, m in enumerate(methods):
        acc = [by_key[(m, d)].accuracy if (m, d) in by_key else np.nan for d in datasets]
        iou = [by_key[(m, d)].iou if (m, d) in by_key else np.nan for d in datasets]
        ax.bar(x + (2 * mi) * width, acc, width, label=f"{m} accuracy")
        ax.bar(x + (2 * mi + 1) * width, iou, width, label=f"{m} IoU")
    ax.set_xticks(x + width * (len(methods) - 0.5))
    ax.set_xticklabels(datasets)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
