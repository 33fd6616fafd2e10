"""Exception types shared across the pipeline."""


class StereoforgeError(Exception):
    """Base class for all pipeline errors."""


class GeometryError(StereoforgeError):
    """Camera/rig geometry does not admit the requested operation."""


class BehindCameraError(GeometryError):
    """A point lies at or behind the camera plane."""


class DegenerateRigError(GeometryError):
    """Rig baseline or orientation is degenerate for rectification."""


class ConvergenceError(StereoforgeError):
    """An iterative solver failed to converge."""


class ShapeError(StereoforgeError):
    """Array arguments disagree in shape or range."""


class FormatError(StereoforgeError):
    """A serialized file violates its format contract."""


class EmptyStratumError(StereoforgeError):
    """An evaluation stratum contains no evaluable pixels."""


class ResolutionError(StereoforgeError):
    """Prediction/ground-truth resolutions are not related by an integer factor."""


class DegenerateRegionError(StereoforgeError):
    """A region is rank-deficient for plane fitting."""
