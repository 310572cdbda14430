"""Exception types shared across the mapping pipeline."""


class RoverMapError(Exception):
    """Base class for all rovermap errors."""


class NonPositiveDisparity(RoverMapError):
    """Disparity at or below the minimum; pixel carries no usable depth."""


class OutOfBounds(RoverMapError):
    """Pixel coordinate outside the image domain."""


class BehindCamera(RoverMapError):
    """Point has non-positive depth and cannot be projected."""


class FrameMismatch(RoverMapError):
    """Coordinate frame of the data does not match the transform."""


class DimensionMismatch(RoverMapError):
    """Image or raster dimensions do not agree."""


class UnknownColor(RoverMapError):
    """Label raster contains a color absent from the palette."""


class DegenerateProbability(RoverMapError):
    """Probability of 0 or 1 would produce infinite log-odds."""


class DegenerateGeometry(RoverMapError):
    """Sampled geometry is collinear or otherwise rank-deficient."""


class TooFewPoints(RoverMapError):
    """Not enough points to fit the requested model."""


class GeometryMismatch(RoverMapError):
    """Raster geometries differ between prediction and ground truth."""


class EmptyEvaluation(RoverMapError):
    """No cells available to evaluate."""


class ConfigInvalid(RoverMapError):
    """Run configuration failed validation."""


class DatasetIncomplete(RoverMapError):
    """Dataset directory is missing required files."""


class MismatchedDatasets(RoverMapError):
    """Two runs being compared were not produced from the same dataset."""
