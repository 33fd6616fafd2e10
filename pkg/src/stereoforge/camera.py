"""Pinhole camera geometry: projection, lens distortion, disparity/depth conversion.

All cameras follow the usual computer-vision convention: x right, y down,
z forward, pixel (0,0) at the top-left pixel center. Distortion is the
Brown-Conrady polynomial with coefficients (k1, k2, k3, p1, p2) applied in
normalized image coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, ConvergenceError, DegenerateRigError, FormatError
from . import kvtext

_Z_EPS = 1e-12
_VALUE_EPS = 1e-6


@dataclass(frozen=True)
class PinholeCamera:
    """Distortion-aware pinhole camera.

    ``dist`` is (k1, k2, k3, p1, p2); all-zero means an ideal pinhole.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    dist: tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"sensor size must be >= 1, got {self.width}x{self.height}")
        if len(self.dist) != 5:
            raise ValueError("dist must have 5 coefficients (k1,k2,k3,p1,p2)")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            warnings.warn(
                f"principal point ({self.cx}, {self.cy}) outside sensor "
                f"{self.width}x{self.height}",
                stacklevel=2,
            )

    @property
    def matrix(self) -> np.ndarray:
        """3x3 intrinsic matrix (zero skew)."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]],
            dtype=np.float64,
        )

    @property
    def tan_half_hfov(self) -> float:
        """tan(HFOV/2) for the pinhole model; trig-free so comparisons are exact."""
        return self.width / (2.0 * self.fx)

    @property
    def hfov(self) -> float:
        """Horizontal field of view in radians."""
        return 2.0 * math.atan(self.tan_half_hfov)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def with_intrinsics(self, a: np.ndarray, width: int, height: int) -> "PinholeCamera":
        """Copy of this camera with intrinsic matrix and size replaced."""
        return PinholeCamera(
            fx=float(a[0, 0]), fy=float(a[1, 1]), cx=float(a[0, 2]), cy=float(a[1, 2]),
            width=int(width), height=int(height), dist=self.dist,
        )


def _as_matrix(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {r.shape}")
    return r


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation mapping points between camera frames: x' = R x + t."""

    r: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = _as_matrix(self.r)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        err = np.abs(r.T @ r - np.eye(3)).max()
        if err >= 1e-9:
            raise ValueError(f"rotation not orthonormal: max |R^T R - I| = {err:.3e}")
        det = np.linalg.det(r)
        if abs(det - 1.0) >= 1e-9:
            raise ValueError(f"rotation determinant {det} != 1")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.r.T + self.t

    def compose(self, first: "RigidTransform") -> "RigidTransform":
        """Transform equivalent to applying ``first``, then ``self``."""
        return RigidTransform(self.r @ first.r, self.r @ first.t + self.t)

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.r.T, -self.r.T @ self.t)


@dataclass(frozen=True)
class StereoRig:
    """Reference/target camera pair; ``ref_to_tgt`` maps ref-frame points to the target frame."""

    cam_ref: PinholeCamera
    cam_tgt: PinholeCamera
    ref_to_tgt: RigidTransform

    def __post_init__(self):
        if self.baseline <= 0:
            raise DegenerateRigError("rig baseline is zero")

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.ref_to_tgt.t))

    @property
    def tgt_center_in_ref(self) -> np.ndarray:
        """Target camera center expressed in the reference camera frame."""
        return -self.ref_to_tgt.r.T @ self.ref_to_tgt.t


def _sanitize(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    # Valid pixels must be finite and strictly positive; demote violators.
    return valid & np.isfinite(values) & (values > 0)


@dataclass(frozen=True)
class DisparityMap:
    """Dense disparity in pixels with validity mask and optional variance (px^2)."""

    values: np.ndarray
    valid: np.ndarray
    variance: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if values.shape != valid.shape or values.ndim != 2:
            raise ValueError(f"values/valid shape mismatch: {values.shape} vs {valid.shape}")
        valid = _sanitize(values, valid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)
        if self.variance is not None:
            var = np.asarray(self.variance, dtype=np.float64)
            if var.shape != values.shape:
                raise ValueError("variance shape mismatch")
            object.__setattr__(self, "variance", np.maximum(var, 0.0))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DepthMap:
    """Dense depth in meters with validity mask."""

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if values.shape != valid.shape or values.ndim != 2:
            raise ValueError(f"values/valid shape mismatch: {values.shape} vs {valid.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", _sanitize(values, valid))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def project(cam: PinholeCamera, pose: RigidTransform, points: np.ndarray) -> np.ndarray:
    """Project world points through ``pose`` into pixel coordinates (distortion-free).

    ``points`` is (..., 3); returns (..., 2). Raises BehindCameraError if any
    point lands at or behind the camera plane.
    """
    points = np.asarray(points, dtype=np.float64)
    cam_pts = pose.apply(points)
    z = cam_pts[..., 2]
    if np.any(z <= _Z_EPS):
        raise BehindCameraError("point at or behind camera plane (z <= 1e-12)")
    u = cam.fx * cam_pts[..., 0] / z + cam.cx
    v = cam.fy * cam_pts[..., 1] / z + cam.cy
    return np.stack([u, v], axis=-1)


def distort(cam: PinholeCamera, xy: np.ndarray) -> np.ndarray:
    """Apply Brown-Conrady distortion to normalized coordinates (..., 2)."""
    xy = np.asarray(xy, dtype=np.float64)
    k1, k2, k3, p1, p2 = cam.dist
    x, y = xy[..., 0], xy[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + 2.0 * p2 * x * y + p1 * (r2 + 2.0 * y * y)
    return np.stack([xd, yd], axis=-1)


def _distort_jacobian(cam: PinholeCamera, x, y):
    k1, k2, k3, p1, p2 = cam.dist
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    dradial_dr2 = k1 + 2.0 * k2 * r2 + 3.0 * k3 * r2 * r2
    j00 = radial + 2.0 * x * x * dradial_dr2 + 2.0 * p1 * y + 6.0 * p2 * x
    j01 = 2.0 * x * y * dradial_dr2 + 2.0 * p1 * x + 2.0 * p2 * y
    j10 = 2.0 * x * y * dradial_dr2 + 2.0 * p2 * y + 2.0 * p1 * x
    j11 = radial + 2.0 * y * y * dradial_dr2 + 6.0 * p1 * y + 2.0 * p2 * x
    return j00, j01, j10, j11


def undistort(cam: PinholeCamera, xy: np.ndarray, max_iter: int = 50, tol: float = 1e-12) -> np.ndarray:
    """Invert :func:`distort` by damped Newton iteration.

    Raises ConvergenceError if the residual stays above 1e-10 after
    ``max_iter`` iterations.
    """
    xy = np.asarray(xy, dtype=np.float64)
    if not any(cam.dist):
        return xy.copy()
    target = xy
    cur = xy.copy()
    for _ in range(max_iter):
        fwd = distort(cam, cur)
        res = fwd - target
        if np.abs(res).max() < tol:
            return cur
        x, y = cur[..., 0], cur[..., 1]
        j00, j01, j10, j11 = _distort_jacobian(cam, x, y)
        det = j00 * j11 - j01 * j10
        det = np.where(np.abs(det) < 1e-12, np.copysign(1e-12, det), det)
        dx = (j11 * res[..., 0] - j01 * res[..., 1]) / det
        dy = (-j10 * res[..., 0] + j00 * res[..., 1]) / det
        step = np.stack([dx, dy], axis=-1)
        # Damp large steps: the polynomial is only trustworthy locally.
        norm = np.maximum(np.abs(step).max(axis=-1, keepdims=True), 1e-30)
        step = step * np.minimum(1.0, 0.5 / norm)
        cur = cur - step
    res = np.abs(distort(cam, cur) - target).max()
    if res > 1e-10:
        raise ConvergenceError(f"undistort did not converge: residual {res:.3e} after {max_iter} iterations")
    return cur


def disparity_to_depth(disp: DisparityMap, f: float, b: float) -> DepthMap:
    """Convert disparity (px) to depth (m): depth = f*b/d. Near-zero disparities invalidate."""
    if f <= 0 or b <= 0:
        raise ValueError(f"focal length and baseline must be positive, got f={f}, b={b}")
    ok = disp.valid & (disp.values > _VALUE_EPS)
    with np.errstate(divide="ignore", invalid="ignore"):
        depth = np.where(ok, f * b / disp.values, 0.0)
    return DepthMap(values=depth, valid=ok)


def depth_to_disparity(depth: DepthMap, f: float, b: float) -> DisparityMap:
    """Exact inverse of :func:`disparity_to_depth`; near-zero depths invalidate."""
    if f <= 0 or b <= 0:
        raise ValueError(f"focal length and baseline must be positive, got f={f}, b={b}")
    ok = depth.valid & (depth.values > _VALUE_EPS)
    with np.errstate(divide="ignore", invalid="ignore"):
        disp = np.where(ok, f * b / depth.values, 0.0)
    return DisparityMap(values=disp, valid=ok)


# --- calibration file I/O ------------------------------------------------

_CAM_KEYS = ("fx", "fy", "cx", "cy", "w", "h", "k1", "k2", "k3", "p1", "p2")


@dataclass(frozen=True)
class Calibration:
    """Full rig calibration: L/R (balanced) plus optional C (unbalanced) legs."""

    cam_l: PinholeCamera
    cam_r: PinholeCamera
    rig_lr: StereoRig
    cam_c: PinholeCamera | None = None
    rig_lc: StereoRig | None = None


def _camera_from_kv(kv: dict[str, str], prefix: str, source: str) -> PinholeCamera:
    vals = {}
    for name in _CAM_KEYS:
        key = f"{prefix}.{name}"
        if key not in kv:
            raise FormatError(f"{source}: missing key {key!r}")
        vals[name] = float(kv[key])
    return PinholeCamera(
        fx=vals["fx"], fy=vals["fy"], cx=vals["cx"], cy=vals["cy"],
        width=int(vals["w"]), height=int(vals["h"]),
        dist=(vals["k1"], vals["k2"], vals["k3"], vals["p1"], vals["p2"]),
    )


def _transform_from_kv(kv: dict[str, str], prefix: str, source: str) -> RigidTransform:
    for suffix in ("R", "t"):
        if f"{prefix}.{suffix}" not in kv:
            raise FormatError(f"{source}: missing key {prefix}.{suffix}")
    r = np.array(kvtext.parse_floats(kv[f"{prefix}.R"], 9, source)).reshape(3, 3)
    t = np.array(kvtext.parse_floats(kv[f"{prefix}.t"], 3, source))
    return RigidTransform(r, t)


def parse_calibration(text: str, source: str = "<string>") -> Calibration:
    kv = kvtext.parse_kv(text, source)
    cam_l = _camera_from_kv(kv, "camL", source)
    cam_r = _camera_from_kv(kv, "camR", source)
    rig_lr = StereoRig(cam_l, cam_r, _transform_from_kv(kv, "rig_LR", source))
    cam_c = rig_lc = None
    if any(k.startswith("camC.") for k in kv):
        cam_c = _camera_from_kv(kv, "camC", source)
        rig_lc = StereoRig(cam_l, cam_c, _transform_from_kv(kv, "rig_LC", source))
    return Calibration(cam_l=cam_l, cam_r=cam_r, rig_lr=rig_lr, cam_c=cam_c, rig_lc=rig_lc)


def load_calibration(path) -> Calibration:
    from pathlib import Path

    path = Path(path)
    return parse_calibration(path.read_text(encoding="utf-8"), source=str(path))


def _camera_to_kv(cam: PinholeCamera, prefix: str) -> dict[str, str]:
    k1, k2, k3, p1, p2 = cam.dist
    vals = dict(fx=cam.fx, fy=cam.fy, cx=cam.cx, cy=cam.cy, w=cam.width, h=cam.height,
                k1=k1, k2=k2, k3=k3, p1=p1, p2=p2)
    out = {}
    for name in _CAM_KEYS:
        v = vals[name]
        out[f"{prefix}.{name}"] = str(v) if name in ("w", "h") else repr(float(v))
    return out


def dump_calibration(calib: Calibration) -> str:
    kv: dict[str, str] = {}
    kv.update(_camera_to_kv(calib.cam_l, "camL"))
    kv.update(_camera_to_kv(calib.cam_r, "camR"))
    kv["rig_LR.R"] = kvtext.fmt_floats(calib.rig_lr.ref_to_tgt.r.ravel())
    kv["rig_LR.t"] = kvtext.fmt_floats(calib.rig_lr.ref_to_tgt.t)
    if calib.cam_c is not None and calib.rig_lc is not None:
        kv.update(_camera_to_kv(calib.cam_c, "camC"))
        kv["rig_LC.R"] = kvtext.fmt_floats(calib.rig_lc.ref_to_tgt.r.ravel())
        kv["rig_LC.t"] = kvtext.fmt_floats(calib.rig_lc.ref_to_tgt.t)
    return kvtext.dump_kv(kv)


def save_calibration(path, calib: Calibration) -> None:
    from pathlib import Path

    Path(path).write_text(dump_calibration(calib), encoding="utf-8")
