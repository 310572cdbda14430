"""Geometric baseline: MLESAC principal-plane fit and height classification.

Hypotheses from random 3-point samples are scored by the negative
log-likelihood of a Gaussian-inlier / uniform-outlier mixture whose mixing
coefficient is re-estimated per candidate by a few EM steps. Points
protruding above the refit plane are classified as rocks and fused through
the same Bayes-filtered grid as the label pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, TooFewPoints
from .fusion import PointCloud, SemanticVoxelGrid
from .geometry import Pose
from .labels import Label


@dataclass(frozen=True)
class PlaneModel:
    """Plane n . x = offset with |n| = 1."""

    normal: np.ndarray
    offset_m: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("normal must be unit length")
        object.__setattr__(self, "normal", n)

    def signed_height(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.normal - self.offset_m


@dataclass
class MlesacParams:
    iterations: int = 500
    inlier_sigma_m: float = 0.02
    outlier_span_m: float = 2.0
    em_steps: int = 5
    min_sample_separation_m: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.inlier_sigma_m <= 0:
            raise ValueError("inlier_sigma_m must be > 0")
        if not 0 < self.em_steps <= 50:
            raise ValueError("em_steps must be in (0, 50]")


@dataclass
class HeightClassifierParams:
    rock_height_threshold_m: float = 0.05

    def __post_init__(self):
        if self.rock_height_threshold_m <= 0:
            raise ValueError("rock_height_threshold_m must be > 0")


def _plane_from_sample(sample: np.ndarray) -> tuple[np.ndarray, float] | None:
    a = sample[1] - sample[0]
    b = sample[2] - sample[0]
    n = np.cross(a, b)
    norm = np.linalg.norm(n)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-30)
    if norm < 1e-12 * scale * scale:
        return None
    n = n / norm
    return n, float(n @ sample[0])


def _mixture_score(residuals: np.ndarray, sigma: float, span: float,
                   em_steps: int) -> tuple[float, float]:
    """EM-estimate the inlier fraction and return (neg log-likelihood, gamma)."""
    gauss = np.exp(-0.5 * (residuals / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
    p_out = 1.0 / span
    gamma = 0.5
    for _ in range(em_steps):
        pin = gamma * gauss
        pout = (1.0 - gamma) * p_out
        w = pin / (pin + pout)
        gamma = float(np.clip(w.mean(), 1e-6, 1.0 - 1e-6))
    mix = gamma * gauss + (1.0 - gamma) * p_out
    return float(-np.log(mix).sum()), gamma


def _least_squares_plane(points: np.ndarray) -> tuple[np.ndarray, float]:
    centroid = points.mean(axis=0)
    centered = points - centroid
    # plane normal = singular vector of the smallest singular value
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    n = vt[-1]
    n = n / np.linalg.norm(n)
    return n, float(n @ centroid)


def _canonicalize(normal: np.ndarray, offset: float,
                  sensor_position: np.ndarray) -> tuple[np.ndarray, float]:
    if normal @ sensor_position < offset:
        return -normal, -offset
    return normal, offset


def mlesac_plane(points: np.ndarray, params: MlesacParams | None = None,
                 sensor_position=(0.0, 0.0, 0.0)) -> tuple[PlaneModel, np.ndarray]:
    """Fit the principal plane; returns the model and a boolean inlier mask."""
    params = params or MlesacParams()
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    n_pts = pts.shape[0]
    if n_pts < 3:
        raise TooFewPoints(f"{n_pts} points; need at least 3")
    rng = np.random.default_rng(params.seed)
    sensor = np.asarray(sensor_position, dtype=float)

    best_cost = math.inf
    best = None  # (normal, offset, gamma)
    min_sep2 = params.min_sample_separation_m ** 2
    for _ in range(params.iterations):
        idx = rng.choice(n_pts, size=3, replace=False)
        sample = pts[idx]
        d01 = np.sum((sample[0] - sample[1]) ** 2)
        d02 = np.sum((sample[0] - sample[2]) ** 2)
        d12 = np.sum((sample[1] - sample[2]) ** 2)
        if min(d01, d02, d12) < min_sep2:
            continue
        fit = _plane_from_sample(sample)
        if fit is None:
            continue
        n, off = fit
        residuals = pts @ n - off
        cost, gamma = _mixture_score(residuals, params.inlier_sigma_m,
                                     params.outlier_span_m, params.em_steps)
        if cost < best_cost:
            best_cost = cost
            best = (n, off, gamma)
    if best is None:
        raise DegenerateGeometry("no valid plane hypothesis; points collinear?")

    n, off, gamma = best

    def posterior(normal, offset):
        r = pts @ normal - offset
        gauss = np.exp(-0.5 * (r / params.inlier_sigma_m) ** 2) / (
            math.sqrt(2 * math.pi) * params.inlier_sigma_m)
        pin = gamma * gauss
        pout = (1.0 - gamma) / params.outlier_span_m
        return pin / (pin + pout)

    inliers = posterior(n, off) > 0.5
    if inliers.sum() >= 3:
        n, off = _least_squares_plane(pts[inliers])
    inliers = posterior(n, off) > 0.5
    n, off = _canonicalize(n, off, sensor)
    return PlaneModel(normal=n, offset_m=off), inliers


def classify_by_height(points: np.ndarray, plane: PlaneModel,
                       params: HeightClassifierParams | None = None,
                       sensor_position=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Label points protruding above the plane as rocks, the rest as sand."""
    params = params or HeightClassifierParams()
    n, off = _canonicalize(plane.normal, plane.offset_m,
                           np.asarray(sensor_position, dtype=float))
    h = np.asarray(points, dtype=float) @ n - off
    return np.where(h > params.rock_height_threshold_m,
                    np.uint8(Label.ROCKS), np.uint8(Label.SAND))


def baseline_pipeline(points: np.ndarray, sensor_pose: Pose,
                      grid: SemanticVoxelGrid,
                      mlesac_params: MlesacParams | None = None,
                      classifier_params: HeightClassifierParams | None = None,
                      max_fit_points: int = 20000):
    """One frame of the geometric pipeline: plane fit, height labels, fusion.

    Points are in the sensor frame (sensor at the origin). Large clouds are
    subsampled (seeded) for the plane fit only; all points are classified.
    """
    mlesac_params = mlesac_params or MlesacParams()
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    fit_pts = pts
    if pts.shape[0] > max_fit_points:
        rng = np.random.default_rng(mlesac_params.seed)
        fit_pts = pts[rng.choice(pts.shape[0], size=max_fit_points, replace=False)]
    plane, _ = mlesac_plane(fit_pts, mlesac_params)
    labels = classify_by_height(pts, plane, classifier_params)
    cloud = PointCloud(points=pts, labels=labels, frame=sensor_pose.frame_from)
    stats = grid.insert_labeled_cloud(cloud, sensor_pose)
    return plane, stats
