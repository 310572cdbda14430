"""Dense disparity from a rectified stereo pair.

SAD block matching costs, semi-global path aggregation and winner-take-all
selection with a uniqueness filter and optional parabolic subpixel refinement.
Intensities are floats in [0, 1]; costs are block sums of absolute differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import DimensionMismatch

# 8-bit quantization step; smoothness penalty defaults are expressed in
# units of one quantization level of per-pixel difference squared.
INTENSITY_STEP = 1.0 / 255.0

_ALL_DIRECTIONS = [(0, 1), (0, -1), (1, 0), (-1, 0),
                   (1, 1), (1, -1), (-1, 1), (-1, -1)]


@dataclass
class MatchingParams:
    block_radius: int = 3
    max_disparity: int = 64
    p1_smooth: float | None = None
    p2_smooth: float | None = None
    uniqueness_ratio: float = 1.15
    num_paths: int = 8
    subpixel: bool = True

    def __post_init__(self):
        if self.block_radius < 1:
            raise ValueError("block_radius must be >= 1")
        if self.max_disparity < 1:
            raise ValueError("max_disparity must be >= 1")
        if self.num_paths not in (4, 8):
            raise ValueError("num_paths must be 4 or 8")
        area = self.block_area
        if self.p1_smooth is None:
            self.p1_smooth = 8.0 * area * INTENSITY_STEP ** 2
        if self.p2_smooth is None:
            self.p2_smooth = 32.0 * area * INTENSITY_STEP ** 2
        if not (0 <= self.p1_smooth < self.p2_smooth):
            raise ValueError("need 0 <= p1_smooth < p2_smooth")

    @property
    def block_area(self) -> int:
        side = 2 * self.block_radius + 1
        return side * side

    @property
    def directions(self) -> list[tuple[int, int]]:
        return _ALL_DIRECTIONS[: self.num_paths]


@dataclass
class DisparityMap:
    disparities: np.ndarray  # (H, W) float
    valid: np.ndarray        # (H, W) bool

    def __post_init__(self):
        if self.disparities.shape != self.valid.shape:
            raise DimensionMismatch("disparity/valid shape mismatch")

    @property
    def width(self) -> int:
        return self.disparities.shape[1]

    @property
    def height(self) -> int:
        return self.disparities.shape[0]


def sad_cost_volume(left: np.ndarray, right: np.ndarray,
                    params: MatchingParams) -> np.ndarray:
    """Block-SAD cost volume of shape (H, W, max_disparity + 1).

    cost(v, u, d) sums |left(v+j, u+i) - right(v+j, u+i-d)| over the block;
    right-image samples that fall off the left edge contribute the maximum
    per-pixel difference (1.0).
    """
    left = np.asarray(left, dtype=np.float32)
    right = np.asarray(right, dtype=np.float32)
    if left.shape != right.shape:
        raise DimensionMismatch(f"{left.shape} vs {right.shape}")
    h, w = left.shape
    size = 2 * params.block_radius + 1
    volume = np.empty((h, w, params.max_disparity + 1), dtype=np.float32)
    for d in range(params.max_disparity + 1):
        ad = np.ones_like(left)
        if d < w:
            ad[:, d:] = np.abs(left[:, d:] - right[:, : w - d])
        # uniform_filter averages; rescale to a block sum
        volume[:, :, d] = uniform_filter(ad, size=size, mode="nearest") * params.block_area
    return volume


def _shift_disp(plane: np.ndarray, offset: int) -> np.ndarray:
    """Shift along the disparity axis, padding with +inf."""
    out = np.full_like(plane, np.inf)
    if offset > 0:
        out[:, offset:] = plane[:, :-offset]
    else:
        out[:, :offset] = plane[:, -offset:]
    return out


def _step(cost_row: np.ndarray, prev: np.ndarray, p1: float, p2: float) -> np.ndarray:
    """One pixel step of the path-wise DP recurrence.

    cost_row, prev: (n, D) arrays; rows with non-finite prev start fresh.
    """
    prev_min = prev.min(axis=1, keepdims=True)
    cand = np.minimum(prev, prev_min + p2)
    np.minimum(cand, _shift_disp(prev, 1) + p1, out=cand)
    np.minimum(cand, _shift_disp(prev, -1) + p1, out=cand)
    with np.errstate(invalid="ignore"):  # inf - inf on fresh rows, overwritten below
        out = cost_row + cand - prev_min
    fresh = ~np.isfinite(prev_min[:, 0])
    out[fresh] = cost_row[fresh]
    return out


def aggregate_direction(costs: np.ndarray, dy: int, dx: int,
                        p1: float, p2: float) -> np.ndarray:
    """Aggregate along one scan direction (dy, dx) over the whole volume."""
    h, w, nd = costs.shape
    out = np.empty_like(costs)
    if dy == 0:
        # horizontal: scan columns, vectorized over rows
        cols = range(w) if dx > 0 else range(w - 1, -1, -1)
        prev = np.full((h, nd), np.inf, dtype=costs.dtype)
        for c in cols:
            prev = _step(costs[:, c, :], prev, p1, p2)
            out[:, c, :] = prev
    else:
        # vertical/diagonal: scan rows, vectorized over columns; a diagonal
        # predecessor is the previous row shifted by dx columns
        rows = range(h) if dy > 0 else range(h - 1, -1, -1)
        prev = np.full((w, nd), np.inf, dtype=costs.dtype)
        first = True
        for r in rows:
            if not first and dx != 0:
                shifted = np.full_like(prev, np.inf)
                if dx > 0:
                    shifted[dx:] = prev[:-dx]
                else:
                    shifted[:dx] = prev[-dx:]
                prev = shifted
            if first:
                prev[:] = np.inf
            prev = _step(costs[r], prev, p1, p2)
            out[r] = prev
            first = False
    return out


def sgm_aggregate(costs: np.ndarray, params: MatchingParams) -> np.ndarray:
    """Sum of path-wise DP aggregations over the configured directions."""
    total = np.zeros_like(costs)
    for dy, dx in params.directions:
        total += aggregate_direction(costs, dy, dx, params.p1_smooth, params.p2_smooth)
    return total


def winner_take_all(costs: np.ndarray, params: MatchingParams) -> DisparityMap:
    """Per-pixel argmin with uniqueness filtering and subpixel refinement.

    A pixel is invalid when the winning disparity sits on the volume
    boundary, or when some disparity more than 1 away from the winner has
    cost below uniqueness_ratio times the winning cost. Ties resolve to the
    smaller disparity.
    """
    h, w, nd = costs.shape
    best = np.argmin(costs, axis=2)
    best_cost = np.take_along_axis(costs, best[:, :, None], axis=2)[:, :, 0]

    masked = costs.copy()
    dgrid = np.arange(nd)[None, None, :]
    masked[np.abs(dgrid - best[:, :, None]) <= 1] = np.inf
    second = masked.min(axis=2)
    valid = second >= params.uniqueness_ratio * best_cost
    valid &= (best > 0) & (best < nd - 1)

    disp = best.astype(np.float64)
    if params.subpixel:
        bc = np.clip(best, 1, nd - 2)
        c0 = np.take_along_axis(costs, (bc - 1)[:, :, None], axis=2)[:, :, 0]
        c1 = np.take_along_axis(costs, bc[:, :, None], axis=2)[:, :, 0]
        c2 = np.take_along_axis(costs, (bc + 1)[:, :, None], axis=2)[:, :, 0]
        denom = c0 + c2 - 2.0 * c1
        with np.errstate(divide="ignore", invalid="ignore"):
            offset = np.where(denom > 0, 0.5 * (c0 - c2) / denom, 0.0)
        disp = disp + np.clip(offset, -0.5, 0.5) * valid
    disp[~valid] = 0.0
    return DisparityMap(disparities=disp, valid=valid)


def compute_disparity(left: np.ndarray, right: np.ndarray,
                      params: MatchingParams) -> DisparityMap:
    """Full matching pipeline: SAD costs, path aggregation, WTA."""
    volume = sad_cost_volume(left, right, params)
    aggregated = sgm_aggregate(volume, params)
    return winner_take_all(aggregated, params)
