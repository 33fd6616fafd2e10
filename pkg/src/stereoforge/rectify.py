"""Stereo rectification: balanced pairs, cross-resolution (unbalanced) pairs,
and the rotation-only homography linking the two rectified left views.

Rectifying rotations map directions in the original camera frame into the
rectified frame; the rectified pair shares one orientation with the target
camera displaced along the new x-axis, so correspondences live on equal rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import PinholeCamera, StereoRig, distort
from .errors import DegenerateRigError, FormatError, GeometryError
from . import kvtext

BALANCED = "balanced"
UNBALANCED = "unbalanced"


@dataclass(frozen=True)
class RectifiedSetup:
    """Per-side rectified intrinsics/rotations and output canvas sizes.

    For a balanced setup ``a_ref`` and ``a_tgt`` coincide; for an unbalanced
    one the cropped high-resolution side keeps its own scaled intrinsics so
    that resampling by the size ratio alone aligns epipolar rows.
    """

    kind: str
    a_ref: np.ndarray
    a_tgt: np.ndarray
    r_ref: np.ndarray
    r_tgt: np.ndarray
    size_ref: tuple[int, int]
    size_tgt: tuple[int, int]
    baseline: float

    def __post_init__(self):
        object.__setattr__(self, "a_ref", np.asarray(self.a_ref, dtype=np.float64))
        object.__setattr__(self, "a_tgt", np.asarray(self.a_tgt, dtype=np.float64))
        object.__setattr__(self, "r_ref", np.asarray(self.r_ref, dtype=np.float64))
        object.__setattr__(self, "r_tgt", np.asarray(self.r_tgt, dtype=np.float64))

    @property
    def focal_ref(self) -> float:
        return float(self.a_ref[0, 0])

    @property
    def focal_tgt(self) -> float:
        return float(self.a_tgt[0, 0])


@dataclass(frozen=True)
class WarpField:
    """Backward warp: per-output-pixel source coordinates; NaN marks out-of-bounds."""

    src_x: np.ndarray
    src_y: np.ndarray

    def __post_init__(self):
        if self.src_x.shape != self.src_y.shape or self.src_x.ndim != 2:
            raise ValueError("src_x/src_y must be equal-shaped 2D arrays")

    @property
    def width(self) -> int:
        return self.src_x.shape[1]

    @property
    def height(self) -> int:
        return self.src_x.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.src_x) & np.isfinite(self.src_y)


def _rectifying_orientation(rig: StereoRig) -> np.ndarray:
    """Shared rectified orientation: x along the baseline, z near the mean optical axis."""
    c_tgt = rig.tgt_center_in_ref
    b = np.linalg.norm(c_tgt)
    if b < 1e-9:
        raise DegenerateRigError("baseline too small to rectify")
    x_new = c_tgt / b
    z_mean = (np.array([0.0, 0.0, 1.0]) + rig.ref_to_tgt.r.T @ np.array([0.0, 0.0, 1.0])) / 2.0
    z_new = z_mean - np.dot(z_mean, x_new) * x_new
    nz = np.linalg.norm(z_new)
    if nz < 1e-9:
        raise DegenerateRigError("baseline parallel to optical axis")
    z_new = z_new / nz
    y_new = np.cross(z_new, x_new)
    return np.stack([x_new, y_new, z_new])


def _corner_bounds(cam: PinholeCamera, r_new: np.ndarray, f_new: float) -> np.ndarray:
    """Projections (before principal shift) of the rotated image corner rays."""
    w, h = cam.width, cam.height
    corners = np.array(
        [[0.0, 0.0, 1.0], [w - 1.0, 0.0, 1.0], [0.0, h - 1.0, 1.0], [w - 1.0, h - 1.0, 1.0]]
    )
    rays = corners @ np.linalg.inv(cam.matrix).T
    rot = rays @ r_new.T
    return f_new * rot[:, :2] / rot[:, 2:3]


def rectify_balanced(rig: StereoRig) -> RectifiedSetup:
    """Rectify an equal-resolution pair: shared intrinsics, row-aligned epipolar lines.

    The shared focal length is the mean of the four input focals; the shared
    principal point centers the union of both rotated source footprints on the
    original canvas (borders may fall outside and stay invalid).
    """
    if (rig.cam_ref.width, rig.cam_ref.height) != (rig.cam_tgt.width, rig.cam_tgt.height):
        raise GeometryError("balanced rectification requires equal resolutions")
    r_rect = _rectifying_orientation(rig)
    r_ref = r_rect
    r_tgt = r_rect @ rig.ref_to_tgt.r.T
    f_new = (rig.cam_ref.fx + rig.cam_ref.fy + rig.cam_tgt.fx + rig.cam_tgt.fy) / 4.0
    pts = np.vstack(
        [_corner_bounds(rig.cam_ref, r_ref, f_new), _corner_bounds(rig.cam_tgt, r_tgt, f_new)]
    )
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    w, h = rig.cam_ref.width, rig.cam_ref.height
    cx = (w - 1.0) / 2.0 - (lo[0] + hi[0]) / 2.0
    cy = (h - 1.0) / 2.0 - (lo[1] + hi[1]) / 2.0
    a_new = np.array([[f_new, 0.0, cx], [0.0, f_new, cy], [0.0, 0.0, 1.0]])
    return RectifiedSetup(
        kind=BALANCED, a_ref=a_new, a_tgt=a_new.copy(), r_ref=r_ref, r_tgt=r_tgt,
        size_ref=(w, h), size_tgt=(w, h), baseline=rig.baseline,
    )


def select_narrow_fov(cam_a: PinholeCamera, cam_b: PinholeCamera) -> tuple[int, int]:
    """Return argument indices (i, j): j has the narrower horizontal FOV.

    Ties break toward the camera with fewer pixels, then toward the second
    argument, so the assignment is deterministic and symmetric in its inputs.
    """
    ta, tb = cam_a.tan_half_hfov, cam_b.tan_half_hfov
    if ta != tb:
        return (0, 1) if tb < ta else (1, 0)
    pa, pb = cam_a.pixel_count, cam_b.pixel_count
    if pa != pb:
        return (0, 1) if pb < pa else (1, 0)
    return (0, 1)


def unbalanced_intrinsics(
    cam_i: PinholeCamera, cam_j: PinholeCamera
) -> tuple[float, float, np.ndarray]:
    """Crop/scale simulation making the wide camera ``i`` match camera ``j``.

    Returns the cropped source extent (w_hat, h_hat) in ``i`` pixels and the
    3x3 intrinsic matrix of the simulated camera at j's resolution. The crop
    is centered on the sensor; focal lengths and (shifted) principal point
    scale by the resize factors.
    """
    w_hat = 2.0 * cam_j.tan_half_hfov * cam_i.fx
    h_hat = (cam_j.height / cam_j.width) * w_hat
    if w_hat > cam_i.width + 1e-9 or h_hat > cam_i.height + 1e-9:
        raise GeometryError(
            f"simulated crop {w_hat:.1f}x{h_hat:.1f} exceeds sensor "
            f"{cam_i.width}x{cam_i.height}; camera j must have the narrower FOV"
        )
    sx = cam_j.width / w_hat
    sy = cam_j.height / h_hat
    a_hat = np.array(
        [
            [cam_i.fx * sx, 0.0, (cam_i.cx - (cam_i.width - w_hat) / 2.0) * sx],
            [0.0, cam_i.fy * sy, (cam_i.cy - (cam_i.height - h_hat) / 2.0) * sy],
            [0.0, 0.0, 1.0],
        ]
    )
    return w_hat, h_hat, a_hat


def rectify_unbalanced(rig: StereoRig) -> RectifiedSetup:
    """Rectify a cross-resolution pair so resampling alone aligns rows.

    The wide camera is simulated at the narrow camera's FOV/AR/size, the pair
    is rectified as balanced, and the simulated side's intrinsics are scaled
    back up to its native cropped extent. Each side's output canvas is its
    native resolution: (round(w_hat), round(h_hat)) for the cropped side and
    the narrow camera's own size for the other.
    """
    cams = (rig.cam_ref, rig.cam_tgt)
    i_idx, j_idx = select_narrow_fov(*cams)
    cam_i, cam_j = cams[i_idx], cams[j_idx]
    w_hat, h_hat, a_hat = unbalanced_intrinsics(cam_i, cam_j)
    sim_i = cam_i.with_intrinsics(a_hat, cam_j.width, cam_j.height)
    sim_pair = [None, None]
    sim_pair[i_idx], sim_pair[j_idx] = sim_i, cam_j
    sim_rig = StereoRig(sim_pair[0], sim_pair[1], rig.ref_to_tgt)
    base = rectify_balanced(sim_rig)

    scale = np.diag([w_hat / cam_j.width, h_hat / cam_j.height, 1.0])
    a_shared = base.a_ref  # balanced output shares one matrix
    size_i = (int(round(w_hat)), int(round(h_hat)))
    size_j = (cam_j.width, cam_j.height)
    a_sides = [None, None]
    size_sides = [None, None]
    a_sides[i_idx], a_sides[j_idx] = scale @ a_shared, a_shared.copy()
    size_sides[i_idx], size_sides[j_idx] = size_i, size_j
    return RectifiedSetup(
        kind=UNBALANCED,
        a_ref=a_sides[0], a_tgt=a_sides[1],
        r_ref=base.r_ref, r_tgt=base.r_tgt,
        size_ref=size_sides[0], size_tgt=size_sides[1],
        baseline=rig.baseline,
    )


def lr_to_lc_mapping(setup_lr: RectifiedSetup, setup_lc: RectifiedSetup) -> np.ndarray:
    """Homography sending reference-view pixels of one rectification to the other.

    Both setups must rectify the same physical reference camera; the mapping
    is rotation-only, hence depth-independent.
    """
    h = (
        setup_lc.a_ref
        @ setup_lc.r_ref
        @ setup_lr.r_ref.T
        @ np.linalg.inv(setup_lr.a_ref)
    )
    return h


def apply_homography(h: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Map pixel coordinates (..., 2) through a 3x3 homography."""
    uv = np.asarray(uv, dtype=np.float64)
    ones = np.ones(uv.shape[:-1] + (1,))
    p = np.concatenate([uv, ones], axis=-1) @ h.T
    return p[..., :2] / p[..., 2:3]


def _pixel_grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    v, u = np.mgrid[0:height, 0:width]
    return u.astype(np.float64), v.astype(np.float64)


def homography_warp_field(h: np.ndarray, out_size: tuple[int, int], src_size: tuple[int, int]) -> WarpField:
    """Backward warp field for output pixels mapped through ``inv(h)`` into the source."""
    out_w, out_h = out_size
    src_w, src_h = src_size
    u, v = _pixel_grid(out_w, out_h)
    src = apply_homography(np.linalg.inv(h), np.stack([u, v], axis=-1))
    sx, sy = src[..., 0], src[..., 1]
    oob = (sx < -0.5) | (sx > src_w - 0.5) | (sy < -0.5) | (sy > src_h - 0.5)
    sx = np.where(oob, np.nan, sx)
    sy = np.where(oob, np.nan, sy)
    return WarpField(src_x=sx, src_y=sy)


def rectification_warp(
    cam: PinholeCamera, r_new: np.ndarray, a_new: np.ndarray, out_size: tuple[int, int]
) -> WarpField:
    """Warp field from raw (distorted) images into a rectified view."""
    out_w, out_h = out_size
    u, v = _pixel_grid(out_w, out_h)
    rays = np.stack([u, v, np.ones_like(u)], axis=-1) @ np.linalg.inv(a_new).T
    dirs = rays @ r_new  # r_new.T applied to each ray
    z = dirs[..., 2]
    front = z > 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        xn = np.where(front, dirs[..., 0] / z, np.nan)
        yn = np.where(front, dirs[..., 1] / z, np.nan)
    xy = distort(cam, np.stack([xn, yn], axis=-1))
    sx = cam.fx * xy[..., 0] + cam.cx
    sy = cam.fy * xy[..., 1] + cam.cy
    oob = ~front | (sx < -0.5) | (sx > cam.width - 0.5) | (sy < -0.5) | (sy > cam.height - 0.5)
    return WarpField(src_x=np.where(oob, np.nan, sx), src_y=np.where(oob, np.nan, sy))


def warp_image(
    img: np.ndarray, warp: WarpField, interp: str = "bilinear", fill: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Backward-warp ``img`` (H, W[, C]) through ``warp``; returns (out, valid).

    Bilinear for intensities, nearest for masks/labels. Out-of-bounds outputs
    take ``fill`` and are flagged invalid.
    """
    if interp not in ("bilinear", "nearest"):
        raise ValueError(f"unknown interpolation {interp!r}")
    img = np.asarray(img)
    h, w = img.shape[:2]
    valid = warp.valid
    sx = np.where(valid, warp.src_x, 0.0)
    sy = np.where(valid, warp.src_y, 0.0)
    if interp == "nearest":
        xi = np.clip(np.rint(sx).astype(np.int64), 0, w - 1)
        yi = np.clip(np.rint(sy).astype(np.int64), 0, h - 1)
        out = img[yi, xi].astype(img.dtype, copy=False)
    else:
        x0 = np.clip(np.floor(sx).astype(np.int64), 0, w - 1)
        y0 = np.clip(np.floor(sy).astype(np.int64), 0, h - 1)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        fx = np.clip(sx - x0, 0.0, 1.0)
        fy = np.clip(sy - y0, 0.0, 1.0)
        if img.ndim == 3:
            fx = fx[..., None]
            fy = fy[..., None]
        vals = (
            img[y0, x0] * (1 - fx) * (1 - fy)
            + img[y0, x1] * fx * (1 - fy)
            + img[y1, x0] * (1 - fx) * fy
            + img[y1, x1] * fx * fy
        )
        out = vals.astype(np.float64)
    mask = valid if img.ndim == 2 else valid[..., None]
    out = np.where(mask, out, fill)
    return out, valid


# --- serialization --------------------------------------------------------

def setup_to_kv(setup: RectifiedSetup, prefix: str = "rect") -> dict[str, str]:
    return {
        f"{prefix}.kind": setup.kind,
        f"{prefix}.a_ref": kvtext.fmt_floats(setup.a_ref.ravel()),
        f"{prefix}.a_tgt": kvtext.fmt_floats(setup.a_tgt.ravel()),
        f"{prefix}.r_ref": kvtext.fmt_floats(setup.r_ref.ravel()),
        f"{prefix}.r_tgt": kvtext.fmt_floats(setup.r_tgt.ravel()),
        f"{prefix}.size_ref": f"{setup.size_ref[0]} {setup.size_ref[1]}",
        f"{prefix}.size_tgt": f"{setup.size_tgt[0]} {setup.size_tgt[1]}",
        f"{prefix}.baseline": repr(setup.baseline),
    }


def setup_from_kv(kv: dict[str, str], prefix: str = "rect", source: str = "<kv>") -> RectifiedSetup:
    try:
        kind = kv[f"{prefix}.kind"]
        a_ref = np.array(kvtext.parse_floats(kv[f"{prefix}.a_ref"], 9, source)).reshape(3, 3)
        a_tgt = np.array(kvtext.parse_floats(kv[f"{prefix}.a_tgt"], 9, source)).reshape(3, 3)
        r_ref = np.array(kvtext.parse_floats(kv[f"{prefix}.r_ref"], 9, source)).reshape(3, 3)
        r_tgt = np.array(kvtext.parse_floats(kv[f"{prefix}.r_tgt"], 9, source)).reshape(3, 3)
        w_r, h_r = (int(x) for x in kv[f"{prefix}.size_ref"].split())
        w_t, h_t = (int(x) for x in kv[f"{prefix}.size_tgt"].split())
        baseline = float(kv[f"{prefix}.baseline"])
    except KeyError as exc:
        raise FormatError(f"{source}: missing rectification key {exc}") from exc
    if kind not in (BALANCED, UNBALANCED):
        raise FormatError(f"{source}: unknown rectification kind {kind!r}")
    return RectifiedSetup(
        kind=kind, a_ref=a_ref, a_tgt=a_tgt, r_ref=r_ref, r_tgt=r_tgt,
        size_ref=(w_r, h_r), size_tgt=(w_t, h_t), baseline=baseline,
    )
