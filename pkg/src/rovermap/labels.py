"""Semantic label set, palette-coded raster I/O and label lookup."""

from __future__ import annotations

from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import binary_dilation

from .errors import OutOfBounds, UnknownColor


class Label(IntEnum):
    SAND = 0
    ROCKS = 1
    BACKGROUND = 2


# Pinned default palette (RGB); overridable in the run config.
DEFAULT_PALETTE: dict[tuple[int, int, int], Label] = {
    (255, 228, 132): Label.SAND,
    (180, 60, 40): Label.ROCKS,
    (0, 0, 0): Label.BACKGROUND,
}


def palette_inverse(palette: dict[tuple[int, int, int], Label]) -> dict[int, tuple[int, int, int]]:
    return {int(label): color for color, label in palette.items()}


def load_label_image(path: str | Path,
                     palette: dict[tuple[int, int, int], Label] = DEFAULT_PALETTE) -> np.ndarray:
    """Decode an RGB (or indexed) raster into an (H, W) array of label codes."""
    rgb = np.asarray(Image.open(path).convert("RGB"))
    h, w = rgb.shape[:2]
    labels = np.full((h, w), -1, dtype=np.int16)
    for color, label in palette.items():
        labels[np.all(rgb == np.array(color, dtype=np.uint8), axis=-1)] = int(label)
    if (labels < 0).any():
        v, u = np.argwhere(labels < 0)[0]
        color = tuple(int(c) for c in rgb[v, u])
        raise UnknownColor(f"color {color} at pixel ({u}, {v}) not in palette")
    return labels.astype(np.uint8)


def save_label_image(path: str | Path, labels: np.ndarray,
                     palette: dict[tuple[int, int, int], Label] = DEFAULT_PALETTE) -> None:
    inv = palette_inverse(palette)
    rgb = np.zeros((*labels.shape, 3), dtype=np.uint8)
    for code, color in inv.items():
        rgb[labels == code] = color
    Image.fromarray(rgb).save(path)


def label_at(labels: np.ndarray, u: float, v: float) -> Label:
    """Nearest-pixel label lookup; u, v round to the nearest integer."""
    h, w = labels.shape
    ui = int(np.floor(u + 0.5))
    vi = int(np.floor(v + 0.5))
    if not (0 <= ui < w and 0 <= vi < h):
        raise OutOfBounds(f"({u}, {v}) outside {w}x{h} label image")
    return Label(labels[vi, ui])


def corrupt_labels(labels: np.ndarray, dilate_px: int = 0,
                   flip_fraction: float = 0.0,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Degrade a clean label image to emulate segmenter noise.

    dilate_px grows rock regions by that many pixels (over-segmentation);
    flip_fraction reassigns that fraction of pixels to a random other label.
    """
    out = labels.copy()
    if dilate_px > 0:
        rocks = binary_dilation(out == Label.ROCKS, structure=np.ones((3, 3), bool),
                                iterations=dilate_px)
        out[rocks] = Label.ROCKS
    if flip_fraction > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        flat = out.reshape(-1)
        n = flat.size
        picks = rng.random(n) < flip_fraction
        shift = rng.integers(1, 3, size=n)  # move 1 or 2 codes around the ring
        flat[picks] = (flat[picks] + shift[picks]) % 3
    return out
