"""End-to-end driver: dataset in, semantic map and metrics out."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import dataio, report
from .errors import (ConfigInvalid, DatasetIncomplete, DimensionMismatch,
                     MismatchedDatasets, RoverMapError)
from .evaluate import (collapse_to_2d, compute_confusion, format_metrics_table,
                       load_ground_truth, metrics, save_raster,
                       write_metrics_csv, MetricsReport, ConfusionMatrix)
from .fusion import FusionParams, PointCloud, SemanticVoxelGrid
from .geometry import DEFAULT_MIN_DISPARITY, triangulate_grid
from .labels import load_label_image
from .plane import HeightClassifierParams, MlesacParams, baseline_pipeline
from .stereo import MatchingParams, compute_disparity

log = logging.getLogger(__name__)

METHODS = ("cnn", "mlesac")


@dataclass
class RunConfig:
    dataset: Path
    method: str = "cnn"
    camera: Path | None = None
    out_dir: Path = Path("out")
    frame_range: tuple[int, int] | None = None  # inclusive indices
    min_disparity: float = DEFAULT_MIN_DISPARITY
    use_disparity_rasters: bool = True
    fusion: FusionParams = field(default_factory=FusionParams)
    matching: MatchingParams = field(default_factory=MatchingParams)
    mlesac: MlesacParams = field(default_factory=MlesacParams)
    classifier: HeightClassifierParams = field(default_factory=HeightClassifierParams)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigInvalid(f"method must be one of {METHODS}")
        if not Path(self.dataset).is_dir():
            raise ConfigInvalid(f"dataset directory not found: {self.dataset}")

    def to_manifest(self) -> dict:
        d = {
            "dataset": str(Path(self.dataset).resolve()),
            "method": self.method,
            "camera": str(self.camera) if self.camera else None,
            "out_dir": str(self.out_dir),
            "frame_range": list(self.frame_range) if self.frame_range else None,
            "min_disparity": self.min_disparity,
            "use_disparity_rasters": self.use_disparity_rasters,
            "fusion": asdict(self.fusion),
            "matching": asdict(self.matching),
            "mlesac": asdict(self.mlesac),
            "classifier": asdict(self.classifier),
        }
        return d


_PARAM_BLOCKS = {
    "fusion": FusionParams,
    "matching": MatchingParams,
    "mlesac": MlesacParams,
    "classifier": HeightClassifierParams,
}
_BOOL = {"true": True, "false": False, "1": True, "0": False}


def parse_frame_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        return int(a), int(b)
    except ValueError as e:
        raise ConfigInvalid(f"bad frame range {text!r}, expected a..b") from e


def load_run_config(path: str | Path) -> RunConfig:
    """Plain-text config: `key value`, with dotted keys for parameter blocks."""
    base = Path(path).parent
    top: dict[str, str] = {}
    blocks: dict[str, dict[str, float]] = {k: {} for k in _PARAM_BLOCKS}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, value = line.split(None, 1)
        except ValueError:
            raise ConfigInvalid(f"{path}:{lineno}: expected `key value`")
        if "." in key:
            block, param = key.split(".", 1)
            if block not in blocks:
                raise ConfigInvalid(f"{path}:{lineno}: unknown block {block!r}")
            blocks[block][param] = value
        else:
            top[key] = value

    def build(block_name, cls):
        kwargs = {}
        for k, v in blocks[block_name].items():
            if k not in cls.__dataclass_fields__:
                raise ConfigInvalid(f"unknown parameter {block_name}.{k}")
            f = cls.__dataclass_fields__[k]
            if f.type in ("bool",):
                kwargs[k] = _BOOL[v.lower()]
            elif f.type in ("int",):
                kwargs[k] = int(v)
            else:
                kwargs[k] = float(v)
        try:
            return cls(**kwargs)
        except ValueError as e:
            raise ConfigInvalid(f"{block_name}: {e}") from e

    known = {"dataset", "method", "camera", "out", "frames",
             "min_disparity", "use_disparity_rasters"}
    unknown = set(top) - known
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    if "dataset" not in top:
        raise ConfigInvalid(f"{path}: missing `dataset`")
    cfg = RunConfig(
        dataset=(base / top["dataset"]).resolve(),
        method=top.get("method", "cnn"),
        camera=(base / top["camera"]).resolve() if "camera" in top else None,
        out_dir=(base / top["out"]).resolve() if "out" in top else Path("out"),
        frame_range=parse_frame_range(top["frames"]) if "frames" in top else None,
        min_disparity=float(top.get("min_disparity", DEFAULT_MIN_DISPARITY)),
        use_disparity_rasters=_BOOL[top.get("use_disparity_rasters", "true").lower()],
        fusion=build("fusion", FusionParams),
        matching=build("matching", MatchingParams),
        mlesac=build("mlesac", MlesacParams),
        classifier=build("classifier", HeightClassifierParams),
    )
    cfg.validate()
    return cfg


@dataclass
class RunResult:
    out_dir: Path
    frames_processed: int
    warnings: int
    report: MetricsReport | None = None


def _frame_cloud(cfg: RunConfig, cam, dataset: Path, stem: str):
    """Disparity (loaded or matched) to a labeled-pixel point cloud."""
    disp_path = dataset / "disparity" / f"{stem}.png"
    if cfg.use_disparity_rasters and disp_path.exists():
        disparities, valid = dataio.load_disparity_raster(disp_path)
        if disparities.shape != (cam.height, cam.width):
            raise DimensionMismatch(f"{disp_path}: {disparities.shape}")
    else:
        left = dataio.load_gray_image(dataset / "left" / f"{stem}.png")
        right = dataio.load_gray_image(dataset / "right" / f"{stem}.png")
        if left.shape != (cam.height, cam.width):
            raise DimensionMismatch(f"{stem}: image {left.shape} vs camera "
                                    f"{(cam.height, cam.width)}")
        dmap = compute_disparity(left, right, cfg.matching)
        disparities, valid = dmap.disparities, dmap.valid
    valid = valid & (disparities > cfg.min_disparity)
    v_idx, u_idx = np.nonzero(valid)
    points = triangulate_grid(u_idx, v_idx, disparities[valid], cam)
    return points, u_idx, v_idx


def run(cfg: RunConfig) -> RunResult:
    cfg.validate()
    dataset = Path(cfg.dataset)
    cam = dataio.load_camera_config(cfg.camera or dataset / "camera.cfg")
    poses = dataio.load_poses_csv(dataset / "poses.csv")
    stems = dataio.discover_frames(dataset)
    if cfg.frame_range is not None:
        a, b = cfg.frame_range
        stems = stems[a: b + 1]
    if not stems:
        raise DatasetIncomplete("frame range selects zero frames")

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = SemanticVoxelGrid(cfg.fusion, frame="world")
    warnings = 0
    processed = 0
    for stem in stems:
        try:
            pose = poses.get(stem)
            if pose is None:
                raise DatasetIncomplete(f"poses.csv has no entry for {stem}")
            points, u_idx, v_idx = _frame_cloud(cfg, cam, dataset, stem)
            if cfg.method == "cnn":
                label_path = dataset / "labels" / f"{stem}.png"
                if not label_path.exists():
                    raise DatasetIncomplete(f"missing {label_path}")
                label_img = load_label_image(label_path)
                if label_img.shape != (cam.height, cam.width):
                    raise DimensionMismatch(f"{label_path}: {label_img.shape}")
                labels = label_img[v_idx, u_idx]
                grid.insert_labeled_cloud(
                    PointCloud(points, labels, frame="left_camera"), pose)
            else:
                baseline_pipeline(points, pose, grid,
                                  mlesac_params=cfg.mlesac,
                                  classifier_params=cfg.classifier)
            processed += 1
        except RoverMapError as e:
            log.warning("frame %s skipped: %s", stem, e)
            warnings += 1

    occupied = grid.extract_semantic_map()
    grid.to_ply(out / "map.ply")
    grid.to_csv(out / "grid.csv")

    result_report = None
    gt_raster = dataset / "ground_truth" / "raster.png"
    gt_sidecar = dataset / "ground_truth" / "georef.txt"
    if gt_raster.exists() and gt_sidecar.exists():
        truth = load_ground_truth(gt_raster, gt_sidecar)
        predicted = collapse_to_2d(occupied, cfg.fusion.voxel_size_m, truth.geometry)
        save_raster(out / "predicted_raster.png", predicted)
        report.save_raster_figure(out / "predicted_raster_figure.png", predicted,
                                  title=f"{cfg.method} predicted map")
        confusion = compute_confusion(predicted, truth)
        result_report = metrics(confusion, method=cfg.method,
                                dataset=dataset.name)
        write_metrics_csv(out / "metrics.csv", [result_report])

    manifest = cfg.to_manifest()
    manifest["frames"] = list(stems)
    manifest["frames_processed"] = processed
    manifest["warnings"] = warnings
    (out / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return RunResult(out_dir=out, frames_processed=processed,
                     warnings=warnings, report=result_report)


def _read_metrics_csv(path: Path) -> list[MetricsReport]:
    reports = []
    lines = path.read_text().splitlines()
    for line in lines[1:]:
        m, d, tp, tn, fp, fn, acc, iou = line.split(",")
        reports.append(MetricsReport(
            accuracy=float(acc), iou=float(iou),
            confusion=ConfusionMatrix(int(tp), int(tn), int(fp), int(fn)),
            method=m, dataset=d))
    return reports


def compare(manifest_a: str | Path, manifest_b: str | Path,
            out_dir: str | Path | None = None) -> str:
    """Side-by-side metric table for two runs over the same dataset."""
    ma = json.loads(Path(manifest_a).read_text())
    mb = json.loads(Path(manifest_b).read_text())
    if ma["dataset"] != mb["dataset"]:
        raise MismatchedDatasets(f"{ma['dataset']} vs {mb['dataset']}")
    reports = []
    for manifest_path in (manifest_a, manifest_b):
        metrics_path = Path(manifest_path).parent / "metrics.csv"
        if not metrics_path.exists():
            raise DatasetIncomplete(f"missing {metrics_path}")
        reports.extend(_read_metrics_csv(metrics_path))
    table = format_metrics_table(reports)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out / "comparison.csv", reports)
        (out / "comparison.txt").write_text(table)
        report.save_comparison_figure(out / "comparison.png", reports)
    return table
