"""Deterministic synthetic scenes with analytic ground truth.

Scenes are planar surfaces and axis-aligned boxes rendered by ray casting in
the rectified reference frame, textured procedurally from 3D surface
coordinates so stereo correspondences sample identical albedo by
construction. Per-frame multiplicative patterns emulate texture projectors;
ambiguous regions corrupt the non-reference view to mimic reflective or
transparent material behavior. All randomness is counter-hashed from the
spec seed: identical specs render bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .camera import DisparityMap, PinholeCamera
from .errors import FormatError
from .labels import MaterialMask
from . import kvtext

# --- counter-based hashing --------------------------------------------------

_P1 = np.uint64(0x9E3779B97F4A7C15)
_P2 = np.uint64(0xC2B2AE3D27D4EB4F)
_P3 = np.uint64(0x165667B19E3779F9)
_P4 = np.uint64(0x27D4EB2F165667C5)


_U64 = (1 << 64) - 1


def _mix_int(h: int) -> int:
    h &= _U64
    h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & _U64
    return h ^ (h >> 31)


def mix_seed(*parts: int) -> int:
    h = 0x8446F5E4B1C7D9A3
    for p in parts:
        h = _mix_int(h ^ ((p & _U64) * 0x9E3779B97F4A7C15) & _U64)
    return h


def _hash3(ix, iy, iz, seed: int) -> np.ndarray:
    # uint64 wraparound is the point here; silence the scalar-overflow warning
    with np.errstate(over="ignore"):
        h = (
            ix.astype(np.int64).astype(np.uint64) * _P1
            ^ iy.astype(np.int64).astype(np.uint64) * _P2
            ^ iz.astype(np.int64).astype(np.uint64) * _P3
            ^ np.uint64((seed & _U64) * 0x27D4EB2F165667C5 & _U64)
        )
        h = (h ^ (h >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        h = (h ^ (h >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return h ^ (h >> np.uint64(31))


def _uniform(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def value_noise3(p: np.ndarray, seed: int) -> np.ndarray:
    """Trilinear value noise in [0, 1) over lattice cells of ``p`` (..., 3)."""
    cell = np.floor(p)
    f = p - cell
    f = f * f * (3.0 - 2.0 * f)  # smoothstep
    ix, iy, iz = cell[..., 0], cell[..., 1], cell[..., 2]
    out = np.zeros(p.shape[:-1])
    for dx in (0, 1):
        for dy in (0, 1):
            wx = f[..., 0] if dx else 1.0 - f[..., 0]
            wy = f[..., 1] if dy else 1.0 - f[..., 1]
            for dz in (0, 1):
                wz = f[..., 2] if dz else 1.0 - f[..., 2]
                corner = _uniform(_hash3(ix + dx, iy + dy, iz + dz, seed))
                out += wx * wy * wz * corner
    return out


def fbm3(p: np.ndarray, seed: int) -> np.ndarray:
    """Two-octave value noise in [0, 1)."""
    return 0.65 * value_noise3(p, seed) + 0.35 * value_noise3(2.0 * p, mix_seed(seed, 0x0C7A))


def gaussian_field(shape: tuple[int, int], seed: int) -> np.ndarray:
    """Unit-variance Gaussian noise image keyed purely by ``seed`` and pixel index."""
    h, w = shape
    v, u = np.mgrid[0:h, 0:w]
    h1 = _hash3(u, v, np.zeros_like(u), mix_seed(seed, 0xA1))
    h2 = _hash3(u, v, np.zeros_like(u), mix_seed(seed, 0xB2))
    u1 = (_uniform(h1) * (1.0 - 2e-16)) + 1e-16
    u2 = _uniform(h2)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


# --- scene description -------------------------------------------------------

def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("zero-length vector")
    return v / n


@dataclass(frozen=True)
class Plane:
    """Rectangular (or unbounded) planar patch."""

    point: tuple[float, float, float]
    normal: tuple[float, float, float]
    extent: tuple[float, float] | None = None  # half-sizes along in-plane axes
    tag: int = 0

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        n = _unit(np.asarray(self.normal, dtype=np.float64))
        up = np.array([0.0, 1.0, 0.0]) if abs(n[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
        e1 = _unit(np.cross(up, n))
        e2 = np.cross(n, e1)
        return e1, e2


@dataclass(frozen=True)
class Box:
    """Axis-aligned box."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    tag: int = 0


Surface = Plane | Box


@dataclass(frozen=True)
class Region:
    """Ambiguous image region (reference view): [x0, x1) x [y0, y1), class 1..3."""

    x0: int
    y0: int
    x1: int
    y1: int
    class_id: int

    def __post_init__(self):
        if self.class_id not in (1, 2, 3):
            raise ValueError(f"region class must be 1..3, got {self.class_id}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("empty region rectangle")


@dataclass(frozen=True)
class SceneSpec:
    """Full deterministic description of a synthetic acquisition."""

    width: int = 160
    height: int = 120
    fx: float = 160.0
    fy: float = 160.0
    cx: float = 79.5
    cy: float = 59.5
    baseline_lr: float = 0.08
    # unbalanced leg (narrow-FOV low-res camera sharing the reference center)
    c_width: int = 80
    c_height: int = 60
    c_fx: float = 88.0
    c_fy: float = 88.0
    c_cx: float = 39.5
    c_cy: float = 29.5
    baseline_lc: float = 0.04
    lc_tilt_deg: float = 0.0
    surfaces: tuple[Surface, ...] = ()
    regions: tuple[Region, ...] = ()
    frames: int = 1
    noise_sigma: float = 0.0
    texture_amplitude: float = 55.0
    texture_scale: float = 0.035
    pattern_contrast: float = 0.45
    pattern_scale: float = 0.03
    seed: int = 0

    def cam_l(self) -> PinholeCamera:
        return PinholeCamera(self.fx, self.fy, self.cx, self.cy, self.width, self.height)

    def cam_c(self) -> PinholeCamera:
        return PinholeCamera(self.c_fx, self.c_fy, self.c_cx, self.c_cy, self.c_width, self.c_height)


@dataclass(frozen=True)
class SceneFrame:
    """One rendered textured acquisition of the balanced rig."""

    img_l: np.ndarray
    img_r: np.ndarray
    disp_l: DisparityMap
    disp_r: DisparityMap
    occ_l: np.ndarray
    occ_r: np.ndarray
    material: MaterialMask


@dataclass(frozen=True)
class UnbalancedFrame:
    """One rendered acquisition of the unbalanced rig (reference + narrow camera)."""

    img_l: np.ndarray
    img_c: np.ndarray
    disp_lc: DisparityMap
    disp_c: DisparityMap
    occ_l: np.ndarray


# --- ray casting -------------------------------------------------------------

_T_EPS = 1e-6


def _intersect(origin: np.ndarray, dirs: np.ndarray, surfaces: tuple[Surface, ...]):
    """Nearest intersections: returns (t, surface_index) with t=inf, idx=-1 for misses.

    ``dirs`` must be scaled so the camera-frame z component is 1; ``t`` is then
    the camera depth directly.
    """
    shape = dirs.shape[:-1]
    best_t = np.full(shape, np.inf)
    best_i = np.full(shape, -1, dtype=np.int32)
    for idx, surf in enumerate(surfaces):
        if isinstance(surf, Plane):
            n = _unit(np.asarray(surf.normal, dtype=np.float64))
            p0 = np.asarray(surf.point, dtype=np.float64)
            denom = dirs @ n
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(np.abs(denom) > 1e-12, ((p0 - origin) @ n) / denom, np.inf)
            t = np.where(t > _T_EPS, t, np.inf)
            if surf.extent is not None:
                e1, e2 = surf.basis()
                q = origin + t[..., None] * dirs - p0
                with np.errstate(invalid="ignore"):
                    inside = (np.abs(q @ e1) <= surf.extent[0]) & (np.abs(q @ e2) <= surf.extent[1])
                t = np.where(inside, t, np.inf)
        else:
            lo = np.asarray(surf.lo, dtype=np.float64)
            hi = np.asarray(surf.hi, dtype=np.float64)
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = 1.0 / dirs
            t1 = (lo - origin) * inv
            t2 = (hi - origin) * inv
            tmin = np.minimum(t1, t2).max(axis=-1)
            tmax = np.maximum(t1, t2).min(axis=-1)
            hit = (tmax >= tmin) & (tmin > _T_EPS)
            t = np.where(hit, tmin, np.inf)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_i = np.where(closer, idx, best_i)
    return best_t, best_i


def _camera_dirs(cam: PinholeCamera, rc: np.ndarray) -> np.ndarray:
    """World-frame ray directions per pixel, normalized to camera z = 1."""
    v, u = np.mgrid[0 : cam.height, 0 : cam.width]
    d = np.stack(
        [(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, np.ones_like(u, dtype=np.float64)],
        axis=-1,
    )
    return d @ rc  # rc.T applied to each direction


def _rot_x(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _shade(
    spec: SceneSpec,
    pts: np.ndarray,
    surf_idx: np.ndarray,
    hit: np.ndarray,
    ref_uv: tuple[np.ndarray, np.ndarray],
    frame: int,
    view_tag: int,
    corrupt_view: bool,
) -> np.ndarray:
    """Procedural intensity for hit points; ``ref_uv`` locates ambiguity regions."""
    base = 128.0
    amp = np.where(hit, spec.texture_amplitude, 0.0)
    pat_contrast = np.full(pts.shape[:-1], spec.pattern_contrast)
    u_ref, v_ref = ref_uv
    region_class = np.zeros(pts.shape[:-1], dtype=np.uint8)
    for k, reg in enumerate(spec.regions):
        inside = (u_ref >= reg.x0) & (u_ref < reg.x1) & (v_ref >= reg.y0) & (v_ref < reg.y1) & hit
        region_class = np.where(inside, reg.class_id, region_class)
        if reg.class_id == 1:
            amp = np.where(inside, amp * 0.15, amp)
            pat_contrast = np.where(inside, pat_contrast * 0.3, pat_contrast)

    tex_seed = mix_seed(spec.seed, 0x7E)
    tag = np.zeros(pts.shape[:-1], dtype=np.int64)
    for idx, surf in enumerate(spec.surfaces):
        tag = np.where(surf_idx == idx, surf.tag, tag)
    # per-surface texture: offset the noise domain by the tag so neighbors differ
    p_tex = pts / spec.texture_scale + tag[..., None] * 1013.0
    albedo = base + amp * (2.0 * fbm3(p_tex, tex_seed) - 1.0)

    if corrupt_view:
        indep = base + spec.texture_amplitude * (
            2.0 * fbm3(pts / spec.texture_scale, mix_seed(spec.seed, 0x1D, frame)) - 1.0
        )
        albedo = np.where(region_class == 3, indep, albedo)
        albedo = np.where(region_class == 2, 0.5 * albedo + 0.5 * indep, albedo)

    pattern = 1.0 + pat_contrast * (
        2.0 * fbm3(pts / spec.pattern_scale, mix_seed(spec.seed, 0x9A, frame)) - 1.0
    )
    img = albedo * pattern
    if spec.noise_sigma > 0:
        img = img + spec.noise_sigma * gaussian_field(
            pts.shape[:-1], mix_seed(spec.seed, 0x4E, frame, view_tag)
        )
    img = np.where(hit, img, 0.0)
    return np.clip(img, 0.0, 255.0).astype(np.float32)


def _occlusion(
    origin_other: np.ndarray,
    rc_other: np.ndarray,
    cam_other: PinholeCamera,
    pts: np.ndarray,
    hit: np.ndarray,
    surfaces: tuple[Surface, ...],
) -> np.ndarray:
    """Pixels whose surface point is invisible from the other camera (blocked or out of frame)."""
    rel = pts - origin_other
    cam_pts = rel @ rc_other.T
    z = cam_pts[..., 2]
    front = z > _T_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam_other.fx * cam_pts[..., 0] / z + cam_other.cx
        v = cam_other.fy * cam_pts[..., 1] / z + cam_other.cy
        dirs = rel / z[..., None]  # camera-z-normalized world directions
    in_frame = (
        front
        & (u >= -0.5)
        & (u <= cam_other.width - 0.5)
        & (v >= -0.5)
        & (v <= cam_other.height - 0.5)
    )
    dirs = np.where(front[..., None], dirs, 1.0)
    t_hit, _ = _intersect(origin_other, dirs, surfaces)
    blocked = t_hit < z * (1.0 - 1e-7)
    return hit & (~in_frame | blocked)


def _material(spec: SceneSpec) -> MaterialMask:
    labels = np.zeros((spec.height, spec.width), dtype=np.uint8)
    for reg in spec.regions:
        labels[reg.y0 : reg.y1, reg.x0 : reg.x1] = reg.class_id
    return MaterialMask(labels=labels)


def _ref_projection(pts: np.ndarray, cam: PinholeCamera, rc: np.ndarray, origin: np.ndarray):
    rel = (pts - origin) @ rc.T
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.fx * rel[..., 0] / rel[..., 2] + cam.cx
        v = cam.fy * rel[..., 1] / rel[..., 2] + cam.cy
    return u, v


def render_scene(spec: SceneSpec, frame: int = 0) -> SceneFrame:
    """Render one textured frame of the balanced rig with analytic ground truth."""
    if not spec.surfaces:
        raise ValueError("scene has no surfaces")
    cam = spec.cam_l()
    rc = np.eye(3)
    o_l = np.zeros(3)
    o_r = np.array([spec.baseline_lr, 0.0, 0.0])

    dirs_l = _camera_dirs(cam, rc)
    t_l, si_l = _intersect(o_l, dirs_l, spec.surfaces)
    hit_l = np.isfinite(t_l)
    pts_l = o_l + np.where(hit_l, t_l, 0.0)[..., None] * dirs_l

    dirs_r = _camera_dirs(cam, rc)
    t_r, si_r = _intersect(o_r, dirs_r, spec.surfaces)
    hit_r = np.isfinite(t_r)
    pts_r = o_r + np.where(hit_r, t_r, 0.0)[..., None] * dirs_r

    uv_l_of_l = _ref_projection(pts_l, cam, rc, o_l)
    uv_l_of_r = _ref_projection(pts_r, cam, rc, o_l)

    img_l = _shade(spec, pts_l, si_l, hit_l, uv_l_of_l, frame, view_tag=0, corrupt_view=False)
    img_r = _shade(spec, pts_r, si_r, hit_r, uv_l_of_r, frame, view_tag=1, corrupt_view=True)

    fb = cam.fx * spec.baseline_lr
    disp_l = DisparityMap(values=np.where(hit_l, fb / np.where(hit_l, t_l, 1.0), 0.0), valid=hit_l)
    disp_r = DisparityMap(values=np.where(hit_r, fb / np.where(hit_r, t_r, 1.0), 0.0), valid=hit_r)

    occ_l = _occlusion(o_r, rc, cam, pts_l, hit_l, spec.surfaces)
    occ_r = _occlusion(o_l, rc, cam, pts_r, hit_r, spec.surfaces)
    return SceneFrame(
        img_l=img_l, img_r=img_r, disp_l=disp_l, disp_r=disp_r,
        occ_l=occ_l, occ_r=occ_r, material=_material(spec),
    )


def render_unbalanced(spec: SceneSpec, frame: int = 0) -> UnbalancedFrame:
    """Render the unbalanced rig: reference at full resolution, narrow camera at its own.

    The rectified unbalanced frame may be tilted about the baseline axis by
    ``lc_tilt_deg``; both cameras share that orientation so rows stay aligned.
    """
    if not spec.surfaces:
        raise ValueError("scene has no surfaces")
    cam_l = spec.cam_l()
    cam_c = spec.cam_c()
    rc = _rot_x(spec.lc_tilt_deg)
    o_l = np.zeros(3)
    o_c = np.array([spec.baseline_lc, 0.0, 0.0])

    dirs_l = _camera_dirs(cam_l, rc)
    t_l, si_l = _intersect(o_l, dirs_l, spec.surfaces)
    hit_l = np.isfinite(t_l)
    pts_l = o_l + np.where(hit_l, t_l, 0.0)[..., None] * dirs_l

    dirs_c = _camera_dirs(cam_c, rc)
    t_c, si_c = _intersect(o_c, dirs_c, spec.surfaces)
    hit_c = np.isfinite(t_c)
    pts_c = o_c + np.where(hit_c, t_c, 0.0)[..., None] * dirs_c

    uv_l_of_l = _ref_projection(pts_l, cam_l, rc, o_l)
    uv_l_of_c = _ref_projection(pts_c, cam_l, rc, o_l)

    img_l = _shade(spec, pts_l, si_l, hit_l, uv_l_of_l, frame, view_tag=2, corrupt_view=False)
    img_c = _shade(spec, pts_c, si_c, hit_c, uv_l_of_c, frame, view_tag=3, corrupt_view=True)

    disp_lc = DisparityMap(
        values=np.where(hit_l, cam_l.fx * spec.baseline_lc / np.where(hit_l, t_l, 1.0), 0.0),
        valid=hit_l,
    )
    disp_c = DisparityMap(
        values=np.where(hit_c, cam_c.fx * spec.baseline_lc / np.where(hit_c, t_c, 1.0), 0.0),
        valid=hit_c,
    )
    occ_l = _occlusion(o_c, rc, cam_c, pts_l, hit_l, spec.surfaces)
    return UnbalancedFrame(img_l=img_l, img_c=img_c, disp_lc=disp_lc, disp_c=disp_c, occ_l=occ_l)


# --- stock scenes -------------------------------------------------------------

def plane_scene(
    width: int = 160,
    height: int = 120,
    d_max: int = 48,
    seed: int = 0,
    frames: int = 1,
    noise_sigma: float = 0.0,
    slope: tuple[float, float] = (0.12, 0.08),
    **overrides,
) -> SceneSpec:
    """Single slanted textured plane spanning mid-range disparities."""
    fx = float(width)
    z = fx * 0.08 / (0.42 * d_max)
    spec = SceneSpec(
        width=width, height=height, fx=fx, fy=fx,
        cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
        c_width=width // 2, c_height=height // 2,
        c_fx=fx * 0.55, c_fy=fx * 0.55,
        c_cx=(width // 2 - 1) / 2.0, c_cy=(height // 2 - 1) / 2.0,
        surfaces=(_slanted_plane(z, slope),),
        frames=frames, noise_sigma=noise_sigma, seed=seed,
        **overrides,
    )
    return spec


def _slanted_plane(z_center: float, slope: tuple[float, float]) -> Plane:
    """Unbounded plane through (0, 0, z_center) tilted by the given x/y slopes."""
    n = _unit(np.array([slope[0], slope[1], 1.0]))
    return Plane(point=(0.0, 0.0, z_center), normal=(float(n[0]), float(n[1]), float(n[2])), extent=None, tag=1)


def occlusion_scene(
    width: int = 160,
    height: int = 120,
    d_max: int = 48,
    seed: int = 0,
    frames: int = 1,
    noise_sigma: float = 0.0,
    **overrides,
) -> SceneSpec:
    """Background plane plus a fronto-parallel box casting an occlusion band."""
    base = plane_scene(width, height, d_max, seed, frames, noise_sigma, **overrides)
    fx = base.fx
    z_box = fx * base.baseline_lr / (0.72 * d_max)
    # shallow box slightly right of the optical axis, a third of the frame wide;
    # kept thin so its side faces stay a sliver in projection
    half_w = 0.16 * width * z_box / fx
    half_h = 0.20 * height * z_box / fx
    cx_w = 0.08 * width * z_box / fx
    box = Box(
        lo=(cx_w - half_w, -half_h, z_box), hi=(cx_w + half_w, half_h, z_box + 0.02), tag=2
    )
    return replace(base, surfaces=base.surfaces + (box,))


def ambiguous_scene(
    width: int = 160,
    height: int = 120,
    d_max: int = 48,
    seed: int = 0,
    frames: int = 6,
    noise_sigma: float = 4.0,
    class_id: int = 3,
    **overrides,
) -> SceneSpec:
    """Plane scene with a mirror-like region where the target view decorrelates."""
    base = plane_scene(width, height, d_max, seed, frames, noise_sigma, **overrides)
    reg = Region(
        x0=int(width * 0.50), y0=int(height * 0.18),
        x1=int(width * 0.90), y1=int(height * 0.72),
        class_id=class_id,
    )
    return replace(base, regions=(reg,))


# --- serialization -------------------------------------------------------------

_SCALAR_FIELDS = (
    "width", "height", "fx", "fy", "cx", "cy", "baseline_lr",
    "c_width", "c_height", "c_fx", "c_fy", "c_cx", "c_cy",
    "baseline_lc", "lc_tilt_deg", "frames", "noise_sigma",
    "texture_amplitude", "texture_scale", "pattern_contrast", "pattern_scale", "seed",
)
_INT_FIELDS = {"width", "height", "c_width", "c_height", "frames", "seed"}


def spec_to_kv(spec: SceneSpec) -> dict[str, str]:
    kv: dict[str, str] = {}
    for name in _SCALAR_FIELDS:
        v = getattr(spec, name)
        kv[f"scene.{name}"] = str(v) if name in _INT_FIELDS else repr(float(v))
    kv["surface.count"] = str(len(spec.surfaces))
    for k, s in enumerate(spec.surfaces):
        if isinstance(s, Plane):
            kv[f"surface.{k}.kind"] = "plane"
            kv[f"surface.{k}.point"] = kvtext.fmt_floats(s.point)
            kv[f"surface.{k}.normal"] = kvtext.fmt_floats(s.normal)
            kv[f"surface.{k}.extent"] = "none" if s.extent is None else kvtext.fmt_floats(s.extent)
        else:
            kv[f"surface.{k}.kind"] = "box"
            kv[f"surface.{k}.lo"] = kvtext.fmt_floats(s.lo)
            kv[f"surface.{k}.hi"] = kvtext.fmt_floats(s.hi)
        kv[f"surface.{k}.tag"] = str(s.tag)
    kv["region.count"] = str(len(spec.regions))
    for k, r in enumerate(spec.regions):
        kv[f"region.{k}.rect"] = f"{r.x0} {r.y0} {r.x1} {r.y1}"
        kv[f"region.{k}.class"] = str(r.class_id)
    return kv


def spec_from_kv(kv: dict[str, str], source: str = "<kv>") -> SceneSpec:
    args = {}
    for name in _SCALAR_FIELDS:
        key = f"scene.{name}"
        if key not in kv:
            raise FormatError(f"{source}: missing key {key!r}")
        args[name] = int(kv[key]) if name in _INT_FIELDS else float(kv[key])
    surfaces = []
    for k in range(int(kv.get("surface.count", "0"))):
        kind = kv.get(f"surface.{k}.kind")
        tag = int(kv.get(f"surface.{k}.tag", "0"))
        if kind == "plane":
            point = tuple(kvtext.parse_floats(kv[f"surface.{k}.point"], 3, source))
            normal = tuple(kvtext.parse_floats(kv[f"surface.{k}.normal"], 3, source))
            ext_s = kv[f"surface.{k}.extent"]
            extent = None if ext_s == "none" else tuple(kvtext.parse_floats(ext_s, 2, source))
            surfaces.append(Plane(point=point, normal=normal, extent=extent, tag=tag))
        elif kind == "box":
            lo = tuple(kvtext.parse_floats(kv[f"surface.{k}.lo"], 3, source))
            hi = tuple(kvtext.parse_floats(kv[f"surface.{k}.hi"], 3, source))
            surfaces.append(Box(lo=lo, hi=hi, tag=tag))
        else:
            raise FormatError(f"{source}: unknown surface kind {kind!r}")
    regions = []
    for k in range(int(kv.get("region.count", "0"))):
        x0, y0, x1, y1 = (int(x) for x in kv[f"region.{k}.rect"].split())
        regions.append(Region(x0=x0, y0=y0, x1=x1, y1=y1, class_id=int(kv[f"region.{k}.class"])))
    return SceneSpec(surfaces=tuple(surfaces), regions=tuple(regions), **args)
