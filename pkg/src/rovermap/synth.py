"""Deterministic synthetic scenes: textured ground plane plus box and
hemisphere rocks, ray-cast to stereo pairs with exact disparity, labels,
poses and a true top-down occupancy raster.

World frame: x forward, y left, z up. Camera frame: x right, y down,
z forward. Everything is a pure function of the scene description, so
identical seeds give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataio
from .errors import ConfigInvalid
from .evaluate import (CELL_NOTROCK, CELL_ROCK, GroundTruthRaster,
                       RasterGeometry, save_ground_truth)
from .geometry import CameraModel, Pose
from .labels import Label, corrupt_labels, save_label_image
from .stereo import DisparityMap


@dataclass(frozen=True)
class RockPrimitive:
    kind: str            # "box" | "hemisphere"
    cx: float
    cy: float
    sx: float = 0.0      # box extents
    sy: float = 0.0
    sz: float = 0.0
    radius: float = 0.0  # hemisphere

    def footprint_bounds(self) -> tuple[float, float, float, float]:
        if self.kind == "box":
            return (self.cx - self.sx / 2, self.cx + self.sx / 2,
                    self.cy - self.sy / 2, self.cy + self.sy / 2)
        return (self.cx - self.radius, self.cx + self.radius,
                self.cy - self.radius, self.cy + self.radius)


@dataclass
class SyntheticScene:
    camera: CameraModel
    trajectory: list[Pose]
    rocks: list[RockPrimitive] = field(default_factory=list)
    plane_height: float = 0.0
    texture_seed: int = 7
    texture_contrast: float = 0.5
    label_dilate_px: int = 0
    label_flip_fraction: float = 0.0
    raster: RasterGeometry | None = None


def camera_pose(x: float, y: float, z: float, pitch_deg: float,
                yaw_deg: float = 0.0) -> Pose:
    """Camera-to-world pose: heading yaw about +z, pitched down by pitch."""
    p = math.radians(pitch_deg)
    yw = math.radians(yaw_deg)
    forward = np.array([math.cos(p) * math.cos(yw),
                        math.cos(p) * math.sin(yw),
                        -math.sin(p)])
    right = np.array([math.sin(yw), -math.cos(yw), 0.0])
    down = np.cross(forward, right)
    R = np.column_stack([right, down, forward])
    return Pose(R, np.array([x, y, z]), "left_camera", "world")


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic lattice hash in [0, 1)."""
    h = (ix.astype(np.int64).view(np.uint64) * np.uint64(73856093)
         ^ iy.astype(np.int64).view(np.uint64) * np.uint64(19349663)
         ^ np.uint64(seed & 0xFFFFFFFF) * np.uint64(83492791))
    h ^= h >> np.uint64(33)
    h *= np.uint64(0xFF51AFD7ED558CCD)
    h ^= h >> np.uint64(33)
    return (h & np.uint64(0xFFFFFFFF)).astype(np.float64) / 2.0 ** 32


def _value_noise(x: np.ndarray, y: np.ndarray, freq: float, seed: int) -> np.ndarray:
    fx, fy = x * freq, y * freq
    ix, iy = np.floor(fx), np.floor(fy)
    tx, ty = fx - ix, fy - iy
    # smoothstep interpolation between the four lattice corners
    tx = tx * tx * (3 - 2 * tx)
    ty = ty * ty * (3 - 2 * ty)
    v00 = _hash01(ix, iy, seed)
    v10 = _hash01(ix + 1, iy, seed)
    v01 = _hash01(ix, iy + 1, seed)
    v11 = _hash01(ix + 1, iy + 1, seed)
    return (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty


def _texture(x: np.ndarray, y: np.ndarray, seed: int) -> np.ndarray:
    """Multi-octave value noise in [0, 1]."""
    n = (0.5 * _value_noise(x, y, 3.0, seed)
         + 0.3 * _value_noise(x, y, 13.0, seed + 1)
         + 0.2 * _value_noise(x, y, 41.0, seed + 2))
    return n


def _ray_plane(origin, dirs, height):
    dz = dirs[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (height - origin[2]) / dz
    t = np.where((dz != 0) & (t > 1e-9), t, np.inf)
    return t


def _ray_box(origin, dirs, rock: RockPrimitive, plane_h: float):
    lo = np.array([rock.cx - rock.sx / 2, rock.cy - rock.sy / 2, plane_h])
    hi = np.array([rock.cx + rock.sx / 2, rock.cy + rock.sy / 2, plane_h + rock.sz])
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
    t0 = (lo - origin) * inv
    t1 = (hi - origin) * inv
    tnear = np.minimum(t0, t1).max(axis=-1)
    tfar = np.maximum(t0, t1).min(axis=-1)
    hit = (tfar >= tnear) & (tfar > 1e-9)
    t = np.where(tnear > 1e-9, tnear, tfar)
    return np.where(hit, t, np.inf)


def _ray_hemisphere(origin, dirs, rock: RockPrimitive, plane_h: float):
    c = np.array([rock.cx, rock.cy, plane_h])
    oc = origin - c
    a = np.sum(dirs * dirs, axis=-1)
    b = 2.0 * np.sum(dirs * oc, axis=-1)
    cc = float(oc @ oc) - rock.radius ** 2
    disc = b * b - 4 * a * cc
    sq = np.sqrt(np.maximum(disc, 0.0))
    t_near = (-b - sq) / (2 * a)
    t_far = (-b + sq) / (2 * a)
    best = np.full(t_near.shape, np.inf)
    for t in (t_near, t_far):
        z = origin[2] + t * dirs[..., 2]
        ok = (disc >= 0) & (t > 1e-9) & (z >= plane_h)
        best = np.where(ok & (t < best), t, best)
    return best


def _render_view(scene: SyntheticScene, origin: np.ndarray, R: np.ndarray):
    """Ray-cast one pinhole view; returns (intensity, depth, labels)."""
    cam = scene.camera
    u, v = np.meshgrid(np.arange(cam.width, dtype=np.float64),
                       np.arange(cam.height, dtype=np.float64))
    dirs_cam = np.stack([(u - cam.cx) / cam.focal_length_px,
                         (v - cam.cy) / cam.focal_length_px,
                         np.ones_like(u)], axis=-1)
    dirs = dirs_cam @ R.T

    depth = _ray_plane(origin, dirs, scene.plane_height)
    labels = np.where(np.isfinite(depth), np.uint8(Label.SAND),
                      np.uint8(Label.BACKGROUND))
    for rock in scene.rocks:
        if rock.kind == "box":
            t = _ray_box(origin, dirs, rock, scene.plane_height)
        elif rock.kind == "hemisphere":
            t = _ray_hemisphere(origin, dirs, rock, scene.plane_height)
        else:
            raise ConfigInvalid(f"unknown rock kind {rock.kind!r}")
        closer = t < depth
        depth = np.where(closer, t, depth)
        labels = np.where(closer, np.uint8(Label.ROCKS), labels)

    # shade by world-position texture; rocks get a darker base and their own seed
    hit = np.isfinite(depth)
    d = np.where(hit, depth, 0.0)
    px = origin[0] + d * dirs[..., 0]
    py = origin[1] + d * dirs[..., 1]
    pz = origin[2] + d * dirs[..., 2]
    c = scene.texture_contrast
    sand_tex = 0.55 + c * (_texture(px, py, scene.texture_seed) - 0.5)
    rock_tex = 0.30 + c * (_texture(px + 3.7 * pz, py - 2.9 * pz,
                                    scene.texture_seed + 100) - 0.5)
    intensity = np.where(labels == Label.ROCKS, rock_tex, sand_tex)
    intensity = np.where(hit, intensity, 0.85)
    return np.clip(intensity, 0.0, 1.0), depth, labels


def render_frame(scene: SyntheticScene, pose_index: int):
    """Render (left, right, true DisparityMap, true label image)."""
    if not 0 <= pose_index < len(scene.trajectory):
        raise IndexError(f"pose index {pose_index} out of range")
    pose = scene.trajectory[pose_index]
    cam = scene.camera
    left, depth, labels = _render_view(scene, pose.translation, pose.rotation)
    right_origin = pose.translation + pose.rotation @ np.array([cam.baseline_m, 0, 0])
    right, _, _ = _render_view(scene, right_origin, pose.rotation)
    with np.errstate(divide="ignore"):
        disp = cam.focal_length_px * cam.baseline_m / depth
    valid = np.isfinite(depth)
    disp = np.where(valid, disp, 0.0)
    return left, right, DisparityMap(disparities=disp, valid=valid), labels


def oracle_labeler(scene: SyntheticScene, pose_index: int,
                   dilate_px: int | None = None,
                   flip_fraction: float | None = None,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Perfect geometric labels, optionally corrupted to emulate a CNN."""
    _, _, _, labels = render_frame(scene, pose_index)
    k = scene.label_dilate_px if dilate_px is None else dilate_px
    eps = scene.label_flip_fraction if flip_fraction is None else flip_fraction
    if rng is None:
        rng = np.random.default_rng(scene.texture_seed + 1000 + pose_index)
    return corrupt_labels(labels, dilate_px=k, flip_fraction=eps, rng=rng)


def true_raster(scene: SyntheticScene, geometry: RasterGeometry) -> GroundTruthRaster:
    """Exact rock-footprint raster: a cell is Rock iff its interior
    intersects a rock's ground projection."""
    cells = np.full((geometry.height, geometry.width), CELL_NOTROCK, dtype=np.uint8)
    cs = geometry.cell_size_m
    ox, oy = geometry.origin
    eps = 1e-9 * cs  # boundary-touching (zero-area) overlap does not count
    for rock in scene.rocks:
        x0, x1, y0, y1 = rock.footprint_bounds()
        i_lo = int(np.floor((x0 - ox) / cs)) - 1
        i_hi = int(np.ceil((x1 - ox) / cs)) + 1
        j_lo = int(np.floor((y0 - oy) / cs)) - 1
        j_hi = int(np.ceil((y1 - oy) / cs)) + 1
        for j in range(max(j_lo, 0), min(j_hi, geometry.height - 1) + 1):
            cy0, cy1 = oy + j * cs, oy + (j + 1) * cs
            for i in range(max(i_lo, 0), min(i_hi, geometry.width - 1) + 1):
                cx0, cx1 = ox + i * cs, ox + (i + 1) * cs
                if rock.kind == "box":
                    hit = (cx1 > x0 + eps) and (cx0 < x1 - eps) and \
                          (cy1 > y0 + eps) and (cy0 < y1 - eps)
                else:
                    # strict distance from circle center to the cell rectangle
                    dx = max(cx0 - rock.cx, 0.0, rock.cx - cx1)
                    dy = max(cy0 - rock.cy, 0.0, rock.cy - cy1)
                    hit = math.hypot(dx, dy) < rock.radius - eps
                if hit:
                    cells[j, i] = CELL_ROCK
    return GroundTruthRaster(geometry=geometry, cells=cells)


def _parse_kv(parts: list[str]) -> dict[str, float]:
    out = {}
    for p in parts:
        k, v = p.split("=", 1)
        out[k] = float(v)
    return out


def parse_scene(path: str | Path) -> SyntheticScene:
    """Plain-text scene description, one directive per line.

    camera focal_px=.. baseline_m=.. cx=.. cy=.. width=.. height=..
    pose x y z pitch_deg [yaw_deg]
    rock box cx=.. cy=.. sx=.. sy=.. sz=..
    rock hemisphere cx=.. cy=.. r=..
    raster origin_x=.. origin_y=.. width=.. height=.. cell_size_m=..
    plane_height / texture_seed / texture_contrast /
    label_dilate_px / label_flip_fraction <value>
    """
    camera = None
    trajectory: list[Pose] = []
    rocks: list[RockPrimitive] = []
    raster = None
    scalars: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            kind = parts[0]
            if kind == "camera":
                kv = _parse_kv(parts[1:])
                camera = CameraModel(kv["focal_px"], kv["baseline_m"],
                                     (kv["cx"], kv["cy"]),
                                     (int(kv["width"]), int(kv["height"])))
            elif kind == "pose":
                vals = [float(p) for p in parts[1:]]
                yaw = vals[4] if len(vals) > 4 else 0.0
                trajectory.append(camera_pose(vals[0], vals[1], vals[2],
                                              vals[3], yaw))
            elif kind == "rock":
                kv = _parse_kv(parts[2:])
                if parts[1] == "box":
                    rocks.append(RockPrimitive("box", kv["cx"], kv["cy"],
                                               kv["sx"], kv["sy"], kv["sz"]))
                elif parts[1] == "hemisphere":
                    rocks.append(RockPrimitive("hemisphere", kv["cx"], kv["cy"],
                                               radius=kv["r"]))
                else:
                    raise ValueError(f"unknown rock kind {parts[1]!r}")
            elif kind == "raster":
                kv = _parse_kv(parts[1:])
                raster = RasterGeometry(int(kv["width"]), int(kv["height"]),
                                        kv["cell_size_m"],
                                        (kv["origin_x"], kv["origin_y"]))
            elif kind in ("plane_height", "texture_seed", "texture_contrast",
                          "label_dilate_px", "label_flip_fraction"):
                scalars[kind] = float(parts[1])
            else:
                raise ValueError(f"unknown directive {kind!r}")
        except (ValueError, KeyError, IndexError) as e:
            raise ConfigInvalid(f"{path}:{lineno}: {e}") from e
    if camera is None:
        raise ConfigInvalid(f"{path}: missing camera line")
    if not trajectory:
        raise ConfigInvalid(f"{path}: needs at least one pose")
    return SyntheticScene(
        camera=camera, trajectory=trajectory, rocks=rocks, raster=raster,
        plane_height=scalars.get("plane_height", 0.0),
        texture_seed=int(scalars.get("texture_seed", 7)),
        texture_contrast=scalars.get("texture_contrast", 0.5),
        label_dilate_px=int(scalars.get("label_dilate_px", 0)),
        label_flip_fraction=scalars.get("label_flip_fraction", 0.0),
    )


def emit_dataset(scene: SyntheticScene, out_dir: str | Path) -> Path:
    """Write the standard dataset layout the pipeline CLI ingests."""
    out = Path(out_dir)
    for sub in ("left", "right", "labels", "disparity"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    poses = {}
    for i, pose in enumerate(scene.trajectory):
        ts = f"{i:06d}"
        left, right, disp, _ = render_frame(scene, i)
        labels = oracle_labeler(scene, i)
        dataio.save_gray_image(out / "left" / f"{ts}.png", left)
        dataio.save_gray_image(out / "right" / f"{ts}.png", right)
        dataio.save_disparity_raster(out / "disparity" / f"{ts}.png",
                                     disp.disparities, disp.valid)
        save_label_image(out / "labels" / f"{ts}.png", labels)
        poses[ts] = pose
    dataio.save_poses_csv(out / "poses.csv", poses)
    dataio.save_camera_config(out / "camera.cfg", scene.camera)
    if scene.raster is not None:
        gt_dir = out / "ground_truth"
        gt_dir.mkdir(exist_ok=True)
        truth = true_raster(scene, scene.raster)
        save_ground_truth(gt_dir / "raster.png", gt_dir / "georef.txt", truth)
    return out
