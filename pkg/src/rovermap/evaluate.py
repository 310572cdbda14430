"""Map evaluation: 2D collapse, confusion counts, accuracy and IoU."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyEvaluation, GeometryMismatch
from .labels import Label

log = logging.getLogger(__name__)

CELL_NOTROCK = 0
CELL_ROCK = 1
CELL_UNOBSERVED = 2

# pinned raster palette (RGB)
RASTER_COLORS = {
    CELL_NOTROCK: (255, 228, 132),
    CELL_ROCK: (180, 60, 40),
    CELL_UNOBSERVED: (0, 0, 0),
}


@dataclass(frozen=True)
class RasterGeometry:
    width: int
    height: int
    cell_size_m: float
    origin: tuple[float, float]  # world (x, y) of the corner of cell (0, 0)
    rotation: float = 0.0

    def __post_init__(self):
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be > 0")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("raster dimensions must be positive")

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        cs = self.cell_size_m
        cos, sin = np.cos(-self.rotation), np.sin(-self.rotation)
        dx, dy = x - self.origin[0], y - self.origin[1]
        lx, ly = cos * dx - sin * dy, sin * dx + cos * dy
        return int(np.floor(lx / cs)), int(np.floor(ly / cs))


@dataclass
class GroundTruthRaster:
    geometry: RasterGeometry
    cells: np.ndarray  # (H, W) codes CELL_*

    def __post_init__(self):
        if self.cells.shape != (self.geometry.height, self.geometry.width):
            raise GeometryMismatch("cells shape disagrees with geometry")


@dataclass
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class MetricsReport:
    accuracy: float
    iou: float
    confusion: ConfusionMatrix
    method: str = ""
    dataset: str = ""


def collapse_to_2d(occupied_voxels, voxel_size_m: float,
                   geometry: RasterGeometry) -> np.ndarray:
    """Project occupied voxels to a 2D raster of CELL_* codes.

    A cell is ROCK if any rock voxel lands in its vertical column, NOTROCK
    if only non-rock occupied voxels do, UNOBSERVED otherwise.
    """
    cells = np.full((geometry.height, geometry.width), CELL_UNOBSERVED, dtype=np.uint8)
    if not occupied_voxels:
        log.warning("collapse_to_2d: empty map, returning all-unobserved raster")
        return cells
    for index, label, _prob in occupied_voxels:
        cx = (index[0] + 0.5) * voxel_size_m
        cy = (index[1] + 0.5) * voxel_size_m
        ix, iy = geometry.cell_of(cx, cy)
        if not (0 <= ix < geometry.width and 0 <= iy < geometry.height):
            continue
        if label == Label.ROCKS:
            cells[iy, ix] = CELL_ROCK
        elif cells[iy, ix] == CELL_UNOBSERVED:
            cells[iy, ix] = CELL_NOTROCK
    return cells


def compute_confusion(predicted: np.ndarray, truth: GroundTruthRaster,
                      mask: np.ndarray | None = None) -> ConfusionMatrix:
    """Count rock/not-rock agreement over cells observed by the rover."""
    if predicted.shape != truth.cells.shape:
        raise GeometryMismatch(f"{predicted.shape} vs {truth.cells.shape}")
    if mask is None:
        mask = predicted != CELL_UNOBSERVED
    mask = mask & (truth.cells != CELL_UNOBSERVED) & (predicted != CELL_UNOBSERVED)
    p_rock = predicted[mask] == CELL_ROCK
    t_rock = truth.cells[mask] == CELL_ROCK
    return ConfusionMatrix(
        tp=int(np.sum(p_rock & t_rock)),
        tn=int(np.sum(~p_rock & ~t_rock)),
        fp=int(np.sum(p_rock & ~t_rock)),
        fn=int(np.sum(~p_rock & t_rock)),
    )


def metrics(confusion: ConfusionMatrix, method: str = "",
            dataset: str = "") -> MetricsReport:
    if confusion.total == 0:
        raise EmptyEvaluation("confusion matrix has no counts")
    accuracy = (confusion.tp + confusion.tn) / confusion.total
    denom = confusion.tp + confusion.fp + confusion.fn
    # no rocks anywhere and none predicted: perfect by convention
    iou = 1.0 if denom == 0 else confusion.tp / denom
    return MetricsReport(accuracy=accuracy, iou=iou, confusion=confusion,
                         method=method, dataset=dataset)


def write_metrics_csv(path: str | Path, reports: list[MetricsReport]) -> None:
    with open(path, "w") as f:
        f.write("method,dataset,tp,tn,fp,fn,accuracy,iou\n")
        for r in reports:
            c = r.confusion
            f.write(f"{r.method},{r.dataset},{c.tp},{c.tn},{c.fp},{c.fn},"
                    f"{r.accuracy:.12g},{r.iou:.12g}\n")


def format_metrics_table(reports: list[MetricsReport]) -> str:
    """Aligned text table: one row per method, Accuracy/IoU per dataset."""
    datasets = sorted({r.dataset for r in reports})
    methods = sorted({r.method for r in reports})
    by_key = {(r.method, r.dataset): r for r in reports}
    header = ["Method"] + [f"{d} {m}" for d in datasets for m in ("Accuracy", "IoU")]
    rows = []
    for m in methods:
        row = [m]
        for d in datasets:
            r = by_key.get((m, d))
            row += [f"{r.accuracy:.2f}", f"{r.iou:.2f}"] if r else ["-", "-"]
        rows.append(row)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
             for r in [header] + rows]
    return "\n".join(lines) + "\n"


def save_raster(path: str | Path, cells: np.ndarray) -> None:
    rgb = np.zeros((*cells.shape, 3), dtype=np.uint8)
    for code, color in RASTER_COLORS.items():
        rgb[cells == code] = color
    Image.fromarray(rgb).save(path)


def load_ground_truth(raster_path: str | Path, sidecar_path: str | Path) -> GroundTruthRaster:
    """Indexed-color raster plus plain-text georeference sidecar."""
    rgb = np.asarray(Image.open(raster_path).convert("RGB"))
    cells = np.full(rgb.shape[:2], CELL_UNOBSERVED, dtype=np.uint8)
    for code, color in RASTER_COLORS.items():
        cells[np.all(rgb == np.array(color, dtype=np.uint8), axis=-1)] = code
    kv = {}
    for line in Path(sidecar_path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            k, v = line.split(None, 1)
            kv[k] = float(v)
    geometry = RasterGeometry(
        width=cells.shape[1], height=cells.shape[0],
        cell_size_m=kv["cell_size_m"],
        origin=(kv["origin_x"], kv["origin_y"]),
        rotation=kv.get("rotation", 0.0),
    )
    return GroundTruthRaster(geometry=geometry, cells=cells)


def save_ground_truth(raster_path: str | Path, sidecar_path: str | Path,
                      truth: GroundTruthRaster) -> None:
    save_raster(raster_path, truth.cells)
    g = truth.geometry
    Path(sidecar_path).write_text(
        f"origin_x {g.origin[0]:.9g}\norigin_y {g.origin[1]:.9g}\n"
        f"cell_size_m {g.cell_size_m:.9g}\nrotation {g.rotation:.9g}\n")
