import numpy as np
import pytest

from rovermap.evaluate import RasterGeometry
from rovermap.geometry import CameraModel
from rovermap.synth import RockPrimitive, SyntheticScene, camera_pose


@pytest.fixture
def small_camera():
    return CameraModel(300.0, 0.12, (159.5, 119.5), (320, 240))


def make_scene(camera, n_frames=10, rocks=None, **kwargs):
    trajectory = [camera_pose(0.25 * i, 0.0, 1.0, 25.0) for i in range(n_frames)]
    return SyntheticScene(camera=camera, trajectory=trajectory,
                          rocks=rocks or [], **kwargs)


# 5 boxes; centers on 0.2 m cell centers, 0.5 m footprints so edges stay
# 0.05 m clear of cell boundaries (robust to disparity quantization)
FIVE_BOXES = [
    RockPrimitive("box", 2.5, 0.5, 0.5, 0.5, 0.3),
    RockPrimitive("box", 3.1, -0.7, 0.5, 0.5, 0.3),
    RockPrimitive("box", 3.9, 0.3, 0.5, 0.5, 0.3),
    RockPrimitive("box", 4.5, -0.3, 0.5, 0.5, 0.3),
    RockPrimitive("box", 5.3, 0.9, 0.5, 0.5, 0.3),
]

EVAL_GEOMETRY = RasterGeometry(width=70, height=40, cell_size_m=0.2,
                               origin=(0.0, -4.0))


@pytest.fixture
def box_scene(small_camera):
    return make_scene(small_camera, n_frames=10, rocks=list(FIVE_BOXES),
                      raster=EVAL_GEOMETRY)
