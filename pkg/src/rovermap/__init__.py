"""Stereo-based 3D semantic terrain mapping for rover navigation."""

from .errors import RoverMapError
from .geometry import CameraModel, Point3, Pose, project, transform, triangulate
from .fusion import FusionParams, PointCloud, SemanticVoxelGrid, log_odds_update
from .labels import Label
from .plane import HeightClassifierParams, MlesacParams, PlaneModel, mlesac_plane
from .stereo import DisparityMap, MatchingParams, compute_disparity

__all__ = [
    "RoverMapError",
    "CameraModel", "Point3", "Pose", "project", "transform", "triangulate",
    "FusionParams", "PointCloud", "SemanticVoxelGrid", "log_odds_update",
    "Label",
    "HeightClassifierParams", "MlesacParams", "PlaneModel", "mlesac_plane",
    "DisparityMap", "MatchingParams", "compute_disparity",
]

__version__ = "0.1.0"
