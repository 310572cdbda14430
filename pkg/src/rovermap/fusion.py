"""Probabilistic semantic voxel grid.

Labeled 3D points update per-label log-odds accumulators in a sparse hashed
grid (binary Bayes filter per label). Extraction keeps voxels whose best
label exceeds the occupancy threshold and assigns that single label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateProbability, FrameMismatch
from .geometry import Pose
from .labels import DEFAULT_PALETTE, Label, palette_inverse

# labels that own an accumulator (background never enters the map)
FUSED_LABELS = (Label.SAND, Label.ROCKS)


@dataclass
class FusionParams:
    voxel_size_m: float = 0.2
    l_occ_probability: float = 0.9
    prior_probability: float = 0.5
    occupied_threshold: float = 0.70
    max_range_m: float = 12.0

    def __post_init__(self):
        if not 0.5 < self.l_occ_probability < 1:
            raise ValueError("l_occ_probability must be in (0.5, 1)")
        if not 0.5 <= self.occupied_threshold < 1:
            raise ValueError("occupied_threshold must be in [0.5, 1)")
        if self.voxel_size_m <= 0:
            raise ValueError("voxel_size_m must be > 0")
        if not 0 < self.prior_probability < 1:
            raise ValueError("prior_probability must be in (0, 1)")


def log_odds_update(l_prev: float, p_inverse_model: float,
                    p_prior: float = 0.5) -> float:
    """One binary Bayes filter step in log-odds form."""
    if not 0.0 < p_inverse_model < 1.0 or not 0.0 < p_prior < 1.0:
        raise DegenerateProbability(
            f"p={p_inverse_model}, prior={p_prior} would give infinite log-odds")
    return (l_prev
            + math.log(p_inverse_model / (1.0 - p_inverse_model))
            - math.log(p_prior / (1.0 - p_prior)))


def probability_from_log_odds(l: float) -> float:
    return 1.0 / (1.0 + math.exp(-l))


@dataclass
class VoxelCell:
    log_odds: np.ndarray  # one accumulator per fused label
    observation_count: int = 0


@dataclass
class InsertStats:
    inserted: int = 0
    skipped_background: int = 0
    skipped_range: int = 0
    updates: int = 0


@dataclass
class PointCloud:
    points: np.ndarray  # (N, 3)
    labels: np.ndarray  # (N,) label codes
    frame: str = "left_camera"


class SemanticVoxelGrid:
    """Sparse voxel grid keyed by integer index floor(p / voxel_size)."""

    def __init__(self, params: FusionParams | None = None, frame: str = "world"):
        self.params = params or FusionParams()
        self.frame = frame
        self.cells: dict[tuple[int, int, int], VoxelCell] = {}

    def __len__(self) -> int:
        return len(self.cells)

    def voxel_index(self, points: np.ndarray) -> np.ndarray:
        return np.floor(np.asarray(points) / self.params.voxel_size_m).astype(np.int64)

    def voxel_center(self, index) -> np.ndarray:
        return (np.asarray(index, dtype=float) + 0.5) * self.params.voxel_size_m

    def insert_labeled_cloud(self, cloud: PointCloud, sensor_pose: Pose) -> InsertStats:
        """Fuse one frame of labeled points.

        Duplicate (voxel, label) observations within the frame collapse to a
        single filter update, so one image cannot saturate a voxel.
        """
        if sensor_pose.frame_from != cloud.frame:
            raise FrameMismatch(
                f"cloud in {cloud.frame!r}, pose expects {sensor_pose.frame_from!r}")
        if sensor_pose.frame_to != self.frame:
            raise FrameMismatch(
                f"grid in {self.frame!r}, pose maps to {sensor_pose.frame_to!r}")
        stats = InsertStats()
        pts = np.asarray(cloud.points, dtype=float).reshape(-1, 3)
        lab = np.asarray(cloud.labels).reshape(-1)
        keep = lab != Label.BACKGROUND
        stats.skipped_background = int((~keep).sum())
        pts, lab = pts[keep], lab[keep]

        in_range = np.linalg.norm(pts, axis=1) <= self.params.max_range_m
        stats.skipped_range = int((~in_range).sum())
        pts, lab = pts[in_range], lab[in_range]
        stats.inserted = pts.shape[0]
        if pts.shape[0] == 0:
            return stats

        world = sensor_pose.apply(pts)
        idx = self.voxel_index(world)
        keys = np.concatenate([idx, lab[:, None].astype(np.int64)], axis=1)
        unique = np.unique(keys, axis=0)
        p_occ = self.params.l_occ_probability
        prior = self.params.prior_probability
        for ix, iy, iz, code in unique:
            key = (int(ix), int(iy), int(iz))
            cell = self.cells.get(key)
            if cell is None:
                cell = VoxelCell(log_odds=np.zeros(len(FUSED_LABELS)))
                self.cells[key] = cell
            slot = FUSED_LABELS.index(Label(int(code)))
            cell.log_odds[slot] = log_odds_update(cell.log_odds[slot], p_occ, prior)
            cell.observation_count += 1
        stats.updates = unique.shape[0]
        return stats

    def cell_probability(self, index: tuple[int, int, int], label: Label) -> float:
        cell = self.cells.get(tuple(index))
        if cell is None or label not in FUSED_LABELS:
            return self.params.prior_probability
        return probability_from_log_odds(cell.log_odds[FUSED_LABELS.index(label)])

    def extract_semantic_map(self) -> list[tuple[tuple[int, int, int], Label, float]]:
        """Occupied voxels with their single winning label.

        A voxel is emitted iff its best label probability strictly exceeds
        the threshold; exact ties resolve to ROCKS (safety-conservative).
        """
        out = []
        for key in sorted(self.cells):
            cell = self.cells[key]
            probs = [probability_from_log_odds(l) for l in cell.log_odds]
            best = max(range(len(FUSED_LABELS)), key=lambda i: (probs[i], FUSED_LABELS[i] == Label.ROCKS))
            if probs[best] > self.params.occupied_threshold:
                out.append((key, FUSED_LABELS[best], probs[best]))
        return out

    def merge(self, other: "SemanticVoxelGrid") -> None:
        """Sum per-(voxel, label) log-odds from a grid built over other frames."""
        if other.frame != self.frame:
            raise FrameMismatch(f"{other.frame!r} vs {self.frame!r}")
        for key, cell in other.cells.items():
            mine = self.cells.get(key)
            if mine is None:
                self.cells[key] = VoxelCell(cell.log_odds.copy(), cell.observation_count)
            else:
                mine.log_odds += cell.log_odds
                mine.observation_count += cell.observation_count

    def to_csv(self, path: str | Path) -> None:
        """Raw dump: one row per touched (voxel, label) accumulator."""
        with open(path, "w") as f:
            f.write("ix,iy,iz,label,log_odds\n")
            for key in sorted(self.cells):
                cell = self.cells[key]
                for slot, label in enumerate(FUSED_LABELS):
                    l = cell.log_odds[slot]
                    if l != 0.0:
                        f.write(f"{key[0]},{key[1]},{key[2]},{label.name},{l:.12g}\n")

    def to_ply(self, path: str | Path, palette=DEFAULT_PALETTE) -> None:
        """Occupied voxel centers as an ASCII PLY cloud with label colors."""
        occupied = self.extract_semantic_map()
        inv = palette_inverse(palette)
        with open(path, "w") as f:
            f.write("ply\nformat ascii 1.0\n")
            f.write(f"element vertex {len(occupied)}\n")
            f.write("property float x\nproperty float y\nproperty float z\n")
            f.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
            f.write("end_header\n")
            for key, label, _prob in occupied:
                c = self.voxel_center(key)
                r, g, b = inv[int(label)]
                f.write(f"{c[0]:.6f} {c[1]:.6f} {c[2]:.6f} {r} {g} {b}\n")
