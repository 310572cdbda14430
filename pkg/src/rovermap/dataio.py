"""Dataset file formats: camera config, pose CSV, images, disparity rasters.

Dataset layout (frames paired by timestamp stem):
    left/<ts>.png  right/<ts>.png  [labels/<ts>.png]  [disparity/<ts>.png]
    poses.csv  camera.cfg  [ground_truth/raster.png + georef.txt]
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from scipy.spatial.transform import Rotation

from .errors import ConfigInvalid, DatasetIncomplete
from .geometry import CameraModel, Pose

DISPARITY_SCALE = 16.0  # 16-bit rasters store fixed-point 1/16 px, 0 = invalid

LUMA = np.array([0.299, 0.587, 0.114])


def load_camera_config(path: str | Path) -> CameraModel:
    kv = {}
    try:
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                k, v = line.split(None, 1)
                kv[k] = float(v)
        return CameraModel(
            focal_length_px=kv["focal_px"],
            baseline_m=kv["baseline_m"],
            principal_point=(kv["cx"], kv["cy"]),
            image_size=(int(kv["width"]), int(kv["height"])),
        )
    except (KeyError, ValueError) as e:
        raise ConfigInvalid(f"bad camera config {path}: {e}") from e


def save_camera_config(path: str | Path, cam: CameraModel) -> None:
    Path(path).write_text(
        f"focal_px {cam.focal_length_px:.9g}\nbaseline_m {cam.baseline_m:.9g}\n"
        f"cx {cam.cx:.9g}\ncy {cam.cy:.9g}\n"
        f"width {cam.width}\nheight {cam.height}\n")


def load_poses_csv(path: str | Path, frame_from: str = "left_camera",
                   frame_to: str = "world") -> dict[str, Pose]:
    """timestamp,x,y,z,qw,qx,qy,qz rows keyed by timestamp stem."""
    poses = {}
    lines = Path(path).read_text().splitlines()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("timestamp") or line.startswith("#"):
            continue
        parts = line.split(",")
        ts = parts[0].strip()
        x, y, z, qw, qx, qy, qz = (float(p) for p in parts[1:8])
        R = Rotation.from_quat([qx, qy, qz, qw]).as_matrix()
        poses[ts] = Pose(R, np.array([x, y, z]), frame_from, frame_to)
    return poses


def save_poses_csv(path: str | Path, poses: dict[str, Pose]) -> None:
    with open(path, "w") as f:
        f.write("timestamp,x,y,z,qw,qx,qy,qz\n")
        for ts in sorted(poses):
            p = poses[ts]
            qx, qy, qz, qw = Rotation.from_matrix(p.rotation).as_quat()
            t = p.translation
            f.write(f"{ts},{t[0]:.9g},{t[1]:.9g},{t[2]:.9g},"
                    f"{qw:.12g},{qx:.12g},{qy:.12g},{qz:.12g}\n")


def load_gray_image(path: str | Path) -> np.ndarray:
    """8-bit gray or RGB image as floats in [0, 1]; RGB converts by luminance."""
    img = Image.open(path)
    arr = np.asarray(img)
    if arr.ndim == 3:
        arr = arr[:, :, :3] @ LUMA
        return (arr / 255.0).astype(np.float64)
    return (arr.astype(np.float64)) / 255.0


def save_gray_image(path: str | Path, gray: np.ndarray) -> None:
    arr = np.clip(np.round(gray * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def load_disparity_raster(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """16-bit fixed-point disparity raster; returns (disparity px, valid)."""
    raw = np.asarray(Image.open(path), dtype=np.uint16)
    valid = raw > 0
    return raw.astype(np.float64) / DISPARITY_SCALE, valid


def save_disparity_raster(path: str | Path, disparities: np.ndarray,
                          valid: np.ndarray) -> None:
    raw = np.round(disparities * DISPARITY_SCALE)
    raw = np.clip(raw, 0, np.iinfo(np.uint16).max).astype(np.uint16)
    raw[~valid] = 0
    img = Image.new("I;16", (raw.shape[1], raw.shape[0]))
    img.frombytes(raw.astype("<u2").tobytes())
    img.save(path)


def discover_frames(dataset_dir: str | Path) -> list[str]:
    """Sorted timestamp stems present in both left/ and right/."""
    root = Path(dataset_dir)
    left = root / "left"
    right = root / "right"
    if not left.is_dir():
        raise DatasetIncomplete(f"missing {left}")
    if not right.is_dir():
        raise DatasetIncomplete(f"missing {right}")
    stems = sorted(p.stem for p in left.glob("*.png"))
    for s in stems:
        if not (right / f"{s}.png").exists():
            raise DatasetIncomplete(f"missing {right / (s + '.png')}")
    if not stems:
        raise DatasetIncomplete(f"no frames under {left}")
    return stems
