"""stereoforge: stereo ground-truth annotation pipeline and benchmark metrics.

Submodules: camera (pinhole geometry), rectify (balanced/unbalanced
rectification), matcher (space-time census/SGM engine), labels
(post-processing and cross-rig warping), metrics (evaluation suite), synth
(analytic scene generator), imio (file formats), cli/server (batch driver
and cleaning service). The hot kernels live in ``stereoforge.kernels`` with
numba and numpy backends.
"""

__version__ = "0.1.0"

from .camera import (
    Calibration,
    DepthMap,
    DisparityMap,
    PinholeCamera,
    RigidTransform,
    StereoRig,
)
from .labels import MaterialMask, PointCloud
from .matcher import BimodalLaplacian, CostVolume, FusedDisparity, MatcherParams
from .rectify import RectifiedSetup, WarpField

__all__ = [
    "Calibration",
    "DepthMap",
    "DisparityMap",
    "PinholeCamera",
    "RigidTransform",
    "StereoRig",
    "MaterialMask",
    "PointCloud",
    "BimodalLaplacian",
    "CostVolume",
    "FusedDisparity",
    "MatcherParams",
    "RectifiedSetup",
    "WarpField",
    "__version__",
]
