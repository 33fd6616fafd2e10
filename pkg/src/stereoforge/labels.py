"""Label post-processing: variance gating, manual-mask application, bilateral
smoothing, cross-rig warping of disparities and material masks, and
point-cloud export for the cleaning UI.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .camera import DisparityMap, PinholeCamera
from .errors import FormatError, ShapeError
from .matcher import FusedDisparity
from .rectify import RectifiedSetup, homography_warp_field, lr_to_lc_mapping, warp_image

MATERIAL_CLASSES = (0, 1, 2, 3)
UNLABELED = 255

BILATERAL_WINDOW = 35
BILATERAL_SIGMA_COLOR = 5.0
BILATERAL_SIGMA_DIST = 50.0


@dataclass(frozen=True)
class MaterialMask:
    """Per-pixel material difficulty class: 0..3, 255 = unlabeled."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.ndim != 2:
            raise ShapeError("material mask must be 2D")
        bad = ~np.isin(labels, (*MATERIAL_CLASSES, UNLABELED))
        if bad.any():
            raise ValueError(f"material mask holds {int(bad.sum())} out-of-range labels")
        object.__setattr__(self, "labels", labels)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def class_mask(self, class_id: int) -> np.ndarray:
        return self.labels == class_id


@dataclass(frozen=True)
class PointCloud:
    """One record per valid disparity pixel, carrying its source coordinates."""

    xyz: np.ndarray       # (N, 3) float32, meters
    rgb: np.ndarray       # (N, 3) uint8
    variance: np.ndarray  # (N,) float32, px^2
    uv: np.ndarray        # (N, 2) uint32 source pixel

    def __post_init__(self):
        n = self.xyz.shape[0]
        if self.xyz.shape != (n, 3) or self.rgb.shape != (n, 3) or \
                self.variance.shape != (n,) or self.uv.shape != (n, 2):
            raise ShapeError("inconsistent point cloud column lengths")
        if n and not np.all(np.isfinite(self.xyz)):
            raise ValueError("point cloud coordinates must be finite")

    @property
    def count(self) -> int:
        return self.xyz.shape[0]


def variance_filter(fused: FusedDisparity, tau_var: float = 1.0) -> np.ndarray:
    """Keep-mask: valid pixels whose fusion variance does not exceed ``tau_var``."""
    if tau_var <= 0:
        raise ValueError(f"tau_var must be positive, got {tau_var}")
    return fused.mean.valid & (fused.variance <= tau_var)


def apply_manual_mask(disp: DisparityMap, removal: np.ndarray) -> DisparityMap:
    """Invalidate pixels flagged in the removal mask; everything else unchanged."""
    removal = np.asarray(removal, dtype=bool)
    if removal.shape != disp.values.shape:
        raise ShapeError("removal mask shape mismatch")
    return DisparityMap(values=disp.values, valid=disp.valid & ~removal, variance=disp.variance)


def bilateral_smooth(
    disp: DisparityMap,
    guide: np.ndarray,
    window: int = BILATERAL_WINDOW,
    sigma_color: float = BILATERAL_SIGMA_COLOR,
    sigma_dist: float = BILATERAL_SIGMA_DIST,
) -> DisparityMap:
    """Joint bilateral smoothing guided by the grayscale image.

    Only valid neighbors contribute; invalid pixels are never filled. Note the
    stock sigma_dist spans the whole window, so the spatial term is nearly
    flat and the guide term dominates.
    """
    guide = np.asarray(guide, dtype=np.float64)
    if guide.shape != disp.values.shape:
        raise ShapeError("guide image shape mismatch")
    if window % 2 == 0 or window < 1:
        raise ValueError(f"window must be odd, got {window}")
    out = kernels.joint_bilateral(
        disp.values, disp.valid, guide, window // 2, sigma_color, sigma_dist
    )
    return DisparityMap(values=out, valid=disp.valid, variance=disp.variance)


def _depth_in_target_frame(
    disp: DisparityMap, setup_lr: RectifiedSetup, setup_lc: RectifiedSetup
) -> np.ndarray:
    """Depth of each reference pixel expressed in the target rectification's frame."""
    f_lr = setup_lr.focal_ref
    b_lr = setup_lr.baseline
    ok = disp.valid & (disp.values > 1e-6)
    with np.errstate(divide="ignore", invalid="ignore"):
        depth = np.where(ok, f_lr * b_lr / disp.values, np.nan)
    h, w = disp.values.shape
    v, u = np.mgrid[0:h, 0:w]
    rays = np.stack([u, v, np.ones_like(u)], axis=-1).astype(np.float64)
    rays = rays @ np.linalg.inv(setup_lr.a_ref).T
    r_rel = setup_lc.r_ref @ setup_lr.r_ref.T
    pts = depth[..., None] * rays
    rotated = pts @ r_rel.T
    return np.where(ok, rotated[..., 2], np.nan)


def warp_disparity_lr_to_lc(
    disp_lr: DisparityMap, setup_lr: RectifiedSetup, setup_lc: RectifiedSetup
) -> DisparityMap:
    """Carry reference-view labels from one rectification to the other.

    Chain: disparity -> depth, rotate back-projected points into the target
    rectified frame, backward-warp the rotated depth with the shared-center
    homography (nearest sampling; disparity is not interpolable across depth
    edges), then convert back with the target focal/baseline.
    """
    z_rot = _depth_in_target_frame(disp_lr, setup_lr, setup_lc)
    h = lr_to_lc_mapping(setup_lr, setup_lc)
    out_w, out_h = setup_lc.size_ref
    field = homography_warp_field(h, (out_w, out_h), (disp_lr.width, disp_lr.height))
    warped, in_bounds = warp_image(z_rot, field, interp="nearest", fill=np.nan)
    ok = in_bounds & np.isfinite(warped) & (warped > 1e-6)
    f_lc = setup_lc.focal_ref
    b_lc = setup_lc.baseline
    with np.errstate(divide="ignore", invalid="ignore"):
        disp = np.where(ok, f_lc * b_lc / np.where(ok, warped, 1.0), 0.0)
    return DisparityMap(values=disp, valid=ok)


def warp_mask_lr_to_lc(
    mask: MaterialMask, setup_lr: RectifiedSetup, setup_lc: RectifiedSetup
) -> MaterialMask:
    """Nearest-neighbor class transfer under the shared-center homography."""
    h = lr_to_lc_mapping(setup_lr, setup_lc)
    out_w, out_h = setup_lc.size_ref
    field = homography_warp_field(h, (out_w, out_h), (mask.width, mask.height))
    warped, in_bounds = warp_image(mask.labels, field, interp="nearest", fill=UNLABELED)
    labels = np.where(in_bounds, warped, UNLABELED).astype(np.uint8)
    return MaterialMask(labels=labels)


def export_point_cloud(
    disp: DisparityMap,
    rgb: np.ndarray,
    cam: PinholeCamera,
    baseline: float,
    variance: np.ndarray | None = None,
) -> PointCloud:
    """Back-project every valid disparity pixel into a 3D point with provenance.

    ``rgb`` is (H, W, 3) uint8 or a grayscale image that gets replicated.
    """
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    rgb = np.asarray(rgb)
    if rgb.ndim == 2:
        rgb = np.repeat(rgb[..., None], 3, axis=2)
    if rgb.shape[:2] != disp.values.shape:
        raise ShapeError("color image shape mismatch")
    if rgb.dtype != np.uint8:
        rgb = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    ok = disp.valid & (disp.values > 1e-6)
    ys, xs = np.nonzero(ok)
    d = disp.values[ys, xs]
    z = cam.fx * baseline / d
    x = (xs - cam.cx) * z / cam.fx
    y = (ys - cam.cy) * z / cam.fy
    var = np.zeros(xs.size, dtype=np.float32)
    if variance is not None:
        variance = np.asarray(variance, dtype=np.float64)
        if variance.shape != disp.values.shape:
            raise ShapeError("variance shape mismatch")
        var = variance[ys, xs].astype(np.float32)
    return PointCloud(
        xyz=np.stack([x, y, z], axis=-1).astype(np.float32),
        rgb=rgb[ys, xs],
        variance=var,
        uv=np.stack([xs, ys], axis=-1).astype(np.uint32),
    )


# --- PLY export ---------------------------------------------------------------

_PLY_PROPS = """property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
property float variance
property uint u
property uint v
"""


def save_ply(path: str | Path, cloud: PointCloud) -> None:
    """ASCII PLY with per-point variance and source-pixel properties."""
    lines = [
        "ply",
        "format ascii 1.0",
        "comment disparity back-projection; variance in px^2; (u,v) source pixel",
        f"element vertex {cloud.count}",
    ]
    header = "\n".join(lines) + "\n" + _PLY_PROPS + "end_header\n"
    rows = []
    for i in range(cloud.count):
        x, y, z = cloud.xyz[i]
        r, g, b = cloud.rgb[i]
        rows.append(
            f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b} {cloud.variance[i]:.6f} "
            f"{cloud.uv[i, 0]} {cloud.uv[i, 1]}"
        )
    Path(path).write_text(header + "\n".join(rows) + ("\n" if rows else ""), encoding="ascii")


def load_ply(path: str | Path) -> PointCloud:
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text or text[0] != "ply":
        raise FormatError(f"{path}: not a PLY file")
    count = None
    body_at = None
    for idx, line in enumerate(text):
        if line.startswith("element vertex "):
            count = int(line.split()[-1])
        if line == "end_header":
            body_at = idx + 1
            break
    if count is None or body_at is None:
        raise FormatError(f"{path}: malformed PLY header")
    rows = text[body_at : body_at + count]
    if len(rows) != count:
        raise FormatError(f"{path}: expected {count} vertices, found {len(rows)}")
    xyz = np.zeros((count, 3), dtype=np.float32)
    rgb = np.zeros((count, 3), dtype=np.uint8)
    var = np.zeros(count, dtype=np.float32)
    uv = np.zeros((count, 2), dtype=np.uint32)
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 9:
            raise FormatError(f"{path}: bad vertex row {i}")
        xyz[i] = [float(p) for p in parts[0:3]]
        rgb[i] = [int(p) for p in parts[3:6]]
        var[i] = float(parts[6])
        uv[i] = [int(parts[7]), int(parts[8])]
    return PointCloud(xyz=xyz, rgb=rgb, variance=var, uv=uv)


def removal_mask_from_points(cloud: PointCloud, indices, shape: tuple[int, int]) -> np.ndarray:
    """Removal mask lighting up the source pixels of the selected cloud points."""
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size:
        uv = cloud.uv[idx]
        mask[uv[:, 1], uv[:, 0]] = True
    return mask
