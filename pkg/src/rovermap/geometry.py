"""Pinhole stereo camera model, rigid transforms and triangulation.

Camera frame convention: x right, y down, z forward (left camera).
Disparity d maps to depth through Z = b*f/d; lateral coordinates use the
principal-point offset (u - cx, v - cy), which makes triangulation exact
for cameras whose principal point is not the pixel origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCamera, FrameMismatch, NonPositiveDisparity, OutOfBounds

DEFAULT_MIN_DISPARITY = 0.5


@dataclass(frozen=True)
class CameraModel:
    focal_length_px: float
    baseline_m: float
    principal_point: tuple[float, float]
    image_size: tuple[int, int]  # (width, height)

    def __post_init__(self):
        cx, cy = self.principal_point
        w, h = self.image_size
        if self.focal_length_px <= 0:
            raise ValueError("focal_length_px must be > 0")
        if self.baseline_m <= 0:
            raise ValueError("baseline_m must be > 0")
        if not (0 <= cx < w and 0 <= cy < h):
            raise ValueError("principal point outside image")

    @property
    def cx(self) -> float:
        return self.principal_point[0]

    @property
    def cy(self) -> float:
        return self.principal_point[1]

    @property
    def width(self) -> int:
        return self.image_size[0]

    @property
    def height(self) -> int:
        return self.image_size[1]


@dataclass(frozen=True)
class Pose:
    """Rigid transform mapping points in frame_from to frame_to."""

    rotation: np.ndarray
    translation: np.ndarray
    frame_from: str
    frame_to: str

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, frame: str = "world") -> "Pose":
        return cls(np.eye(3), np.zeros(3), frame, frame)

    def apply(self, xyz: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) or (3,) array of points."""
        xyz = np.asarray(xyz, dtype=float)
        return xyz @ self.rotation.T + self.translation

    def compose(self, inner: "Pose") -> "Pose":
        """self o inner: first apply inner, then self."""
        if inner.frame_to != self.frame_from:
            raise FrameMismatch(
                f"cannot compose {self.frame_from}<-{inner.frame_to}"
            )
        return Pose(
            self.rotation @ inner.rotation,
            self.rotation @ inner.translation + self.translation,
            inner.frame_from,
            self.frame_to,
        )

    def inverse(self) -> "Pose":
        return Pose(
            self.rotation.T,
            -self.rotation.T @ self.translation,
            self.frame_to,
            self.frame_from,
        )


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float
    frame: str = "left_camera"

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError("point components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


def triangulate(u_l: float, v_l: float, d: float, cam: CameraModel,
                min_disparity: float = DEFAULT_MIN_DISPARITY) -> Point3:
    """Back-project a left-image pixel with disparity d into the left camera frame."""
    if d <= min_disparity:
        raise NonPositiveDisparity(f"disparity {d} <= min {min_disparity}")
    if not (0 <= u_l < cam.width and 0 <= v_l < cam.height):
        raise OutOfBounds(f"pixel ({u_l}, {v_l}) outside {cam.image_size}")
    z = cam.baseline_m * cam.focal_length_px / d
    x = (u_l - cam.cx) * z / cam.focal_length_px
    y = (v_l - cam.cy) * z / cam.focal_length_px
    return Point3(x, y, z, frame="left_camera")


def triangulate_grid(u: np.ndarray, v: np.ndarray, d: np.ndarray,
                     cam: CameraModel) -> np.ndarray:
    """Vectorized back-projection; caller must pre-filter invalid disparities.

    Returns an (N, 3) array in the left camera frame.
    """
    d = np.asarray(d, dtype=float)
    z = cam.baseline_m * cam.focal_length_px / d
    x = (np.asarray(u, dtype=float) - cam.cx) * z / cam.focal_length_px
    y = (np.asarray(v, dtype=float) - cam.cy) * z / cam.focal_length_px
    return np.stack([x, y, z], axis=-1)


def transform(p: Point3, pose: Pose) -> Point3:
    if p.frame != pose.frame_from:
        raise FrameMismatch(f"point in {p.frame!r}, pose expects {pose.frame_from!r}")
    out = pose.apply(p.as_array())
    return Point3(out[0], out[1], out[2], frame=pose.frame_to)


def project(p: Point3, cam: CameraModel) -> tuple[float, float, float]:
    """Exact right-inverse of triangulate: returns (u_l, v_l, d)."""
    if p.z <= 0:
        raise BehindCamera(f"z = {p.z} is not in front of the camera")
    d = cam.baseline_m * cam.focal_length_px / p.z
    u = p.x * cam.focal_length_px / p.z + cam.cx
    v = p.y * cam.focal_length_px / p.z + cam.cy
    return u, v, d
