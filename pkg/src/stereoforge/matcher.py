"""Space-time stereo engine built on classical descriptors.

Per textured frame a census/Hamming cost volume is built; volumes are
averaged across frames so every projected pattern contributes matching
evidence, then decoded by semi-global aggregation and sub-pixel
winner-take-all. Per-frame estimates are fused into a mean disparity with a
per-pixel variance that flags ambiguous (non-Lambertian-like) regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .camera import DisparityMap
from .errors import ShapeError

DEFAULT_CENSUS_WINDOW = (9, 7)

# Per-frame decodes feeding the uncertainty channel run with weaker smoothing:
# full-strength penalties propagate one surface across ambiguous patches and
# hide the cross-frame disagreement the variance is supposed to expose.
UNCERTAINTY_PENALTY_SCALE = 0.25


@dataclass(frozen=True)
class CostVolume:
    """(H, W, d_max+1) non-negative matching costs accumulated over frames."""

    costs: np.ndarray
    frame_count: int = 1

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=np.float32)
        if costs.ndim != 3:
            raise ShapeError(f"cost volume must be 3D, got shape {costs.shape}")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if not np.all(np.isfinite(costs)) or costs.min() < 0:
            raise ValueError("costs must be finite and non-negative")
        object.__setattr__(self, "costs", costs)

    @property
    def width(self) -> int:
        return self.costs.shape[1]

    @property
    def height(self) -> int:
        return self.costs.shape[0]

    @property
    def d_max(self) -> int:
        return self.costs.shape[2] - 1


@dataclass(frozen=True)
class FusedDisparity:
    """Mean disparity over frames plus its per-pixel population variance."""

    mean: DisparityMap
    variance: np.ndarray
    per_frame_count: np.ndarray

    @property
    def width(self) -> int:
        return self.mean.width

    @property
    def height(self) -> int:
        return self.mean.height


@dataclass(frozen=True)
class BimodalLaplacian:
    """Two-mode Laplacian mixture over disparity."""

    pi: float
    mu1: float
    mu2: float
    b1: float
    b2: float

    def __post_init__(self):
        if not (0.0 <= self.pi <= 1.0):
            raise ValueError(f"pi must be in [0,1], got {self.pi}")
        if self.b1 <= 0 or self.b2 <= 0:
            raise ValueError("scale parameters must be positive")


def census_transform(img: np.ndarray, window: tuple[int, int] = DEFAULT_CENSUS_WINDOW) -> np.ndarray:
    """Census descriptors (uint64 per pixel); ``window`` is (width, height), both odd."""
    win_w, win_h = window
    if win_w % 2 == 0 or win_h % 2 == 0 or win_w < 1 or win_h < 1:
        raise ValueError(f"census window must be odd-sized, got {window}")
    if win_w * win_h - 1 > 64:
        raise ValueError(f"census window {window} needs more than 64 bits")
    img = np.asarray(img)
    if img.ndim != 2:
        raise ShapeError("census input must be a single-channel image")
    if win_w > img.shape[1] or win_h > img.shape[0]:
        raise ShapeError(f"census window {window} larger than image {img.shape}")
    return kernels.census_transform(img, win_w, win_h)


def census_bits(window: tuple[int, int] = DEFAULT_CENSUS_WINDOW) -> int:
    return window[0] * window[1] - 1


def default_penalties(bits: int = census_bits()) -> tuple[float, float]:
    """SGM penalties scaled to the descriptor bit count."""
    return 8.0 * bits / 64.0, 32.0 * bits / 64.0


def build_cost_volume(desc_ref: np.ndarray, desc_tgt: np.ndarray, d_max: int) -> CostVolume:
    """Hamming cost volume; targets left of the scanline get the 64-bit ceiling cost."""
    if desc_ref.shape != desc_tgt.shape:
        raise ShapeError(f"descriptor shapes differ: {desc_ref.shape} vs {desc_tgt.shape}")
    if d_max < 0 or d_max >= desc_ref.shape[1]:
        raise ShapeError(f"d_max={d_max} out of range for width {desc_ref.shape[1]}")
    costs = kernels.hamming_cost_volume(
        np.ascontiguousarray(desc_ref, dtype=np.uint64),
        np.ascontiguousarray(desc_tgt, dtype=np.uint64),
        int(d_max),
    )
    return CostVolume(costs=costs, frame_count=1)


def accumulate_volumes(volumes: list[CostVolume]) -> CostVolume:
    """Element-wise mean of per-frame volumes; this is the space-time accumulation."""
    if not volumes:
        raise ValueError("need at least one cost volume")
    shape = volumes[0].costs.shape
    for v in volumes[1:]:
        if v.costs.shape != shape:
            raise ShapeError(f"cost volume shapes differ: {v.costs.shape} vs {shape}")
    acc = np.zeros(shape, dtype=np.float64)
    for v in volumes:
        acc += v.costs
    acc /= len(volumes)
    return CostVolume(costs=acc.astype(np.float32), frame_count=sum(v.frame_count for v in volumes))


def sgm_aggregate(vol: CostVolume, p1: float, p2: float, paths: int = 8) -> CostVolume:
    """Semi-global path aggregation (sum over 4 or 8 scanline directions)."""
    if not (p2 >= p1 >= 0):
        raise ValueError(f"penalties must satisfy P2 >= P1 >= 0, got P1={p1}, P2={p2}")
    agg = kernels.sgm_aggregate(vol.costs, float(p1), float(p2), paths)
    return CostVolume(costs=agg, frame_count=vol.frame_count)


def wta_subpixel(vol: CostVolume) -> DisparityMap:
    """Winner-take-all with parabola refinement through the three costs around the minimum.

    Ties break toward smaller disparity; range-boundary minima stay integer.
    Pixels whose refined disparity is not strictly positive come back invalid.
    """
    costs = vol.costs
    h, w, d_num = costs.shape
    d0 = np.argmin(costs, axis=2)
    disp = d0.astype(np.float64)
    if d_num >= 3:
        interior = (d0 > 0) & (d0 < d_num - 1)
        yy, xx = np.nonzero(interior)
        dd = d0[yy, xx]
        c0 = costs[yy, xx, dd].astype(np.float64)
        cm = costs[yy, xx, dd - 1].astype(np.float64)
        cp = costs[yy, xx, dd + 1].astype(np.float64)
        denom = cm + cp - 2.0 * c0
        offset = np.zeros_like(c0)
        ok = denom > 1e-12
        offset[ok] = (cm[ok] - cp[ok]) / (2.0 * denom[ok])
        disp[yy, xx] = dd + np.clip(offset, -0.5, 0.5)
    return DisparityMap(values=disp, valid=disp > 0)


def fuse_disparities(per_frame: list[DisparityMap]) -> FusedDisparity:
    """Average per-frame maps; the population variance over contributing frames is u*.

    A pixel only contributes where valid; pixels valid in fewer than
    max(2, T/4) frames are invalidated.
    """
    if not per_frame:
        raise ValueError("need at least one disparity map")
    shape = per_frame[0].values.shape
    for d in per_frame[1:]:
        if d.values.shape != shape:
            raise ShapeError("disparity map shapes differ")
    t = len(per_frame)
    vals = np.stack([np.where(d.valid, d.values, 0.0) for d in per_frame])
    mask = np.stack([d.valid for d in per_frame])
    count = mask.sum(axis=0)
    safe = np.maximum(count, 1)
    mean = vals.sum(axis=0) / safe
    sq = (vals - mean[None, :, :]) ** 2
    variance = np.where(mask, sq, 0.0).sum(axis=0) / safe
    floor = max(2.0, t / 4.0)
    valid = count >= floor
    fused = DisparityMap(values=mean, valid=valid, variance=variance)
    return FusedDisparity(mean=fused, variance=np.maximum(variance, 0.0), per_frame_count=count)


def lr_consistency(
    d_left: DisparityMap, d_right: DisparityMap, thresh: float = 2.0
) -> tuple[np.ndarray, np.ndarray]:
    """Mutual consistency masks (left, right).

    A left pixel survives iff its match x - round(d_L) is in range, valid in
    the right map, and the two disparities differ by at most ``thresh``;
    the right mask applies the same rule at x + round(d_R).
    """
    if d_left.values.shape != d_right.values.shape:
        raise ShapeError("left/right disparity shapes differ")
    h, w = d_left.values.shape
    u = np.arange(w)[None, :]

    def one_side(d_a: DisparityMap, d_b: DisparityMap, sign: int) -> np.ndarray:
        xm = u + sign * np.rint(d_a.values).astype(np.int64)
        in_range = (xm >= 0) & (xm < w)
        xm_c = np.clip(xm, 0, w - 1)
        rows = np.arange(h)[:, None]
        other = d_b.values[rows, xm_c]
        other_valid = d_b.valid[rows, xm_c]
        ok = d_a.valid & in_range & other_valid & (np.abs(d_a.values - other) <= thresh)
        return ok

    return one_side(d_left, d_right, -1), one_side(d_right, d_left, +1)


def bimodal_density(m: BimodalLaplacian, d) -> np.ndarray | float:
    """Mixture density: pi/(2 b1) e^{-|d-mu1|/b1} + (1-pi)/(2 b2) e^{-|d-mu2|/b2}."""
    d = np.asarray(d, dtype=np.float64)
    p = m.pi / (2.0 * m.b1) * np.exp(-np.abs(d - m.mu1) / m.b1) + (1.0 - m.pi) / (
        2.0 * m.b2
    ) * np.exp(-np.abs(d - m.mu2) / m.b2)
    return p if p.ndim else float(p)


_SCALE_FLOOR = 0.05  # px; keeps densities finite for zero-spread clusters


def bimodal_fit(samples) -> BimodalLaplacian:
    """Fit a two-mode Laplacian mixture to 1-D disparity samples.

    Clusters by two-means seeded at the min/max sample; each cluster gives a
    median mode and a mean-absolute-deviation scale (floored), the weight is
    the first cluster's share.
    """
    s = np.asarray(samples, dtype=np.float64).ravel()
    if s.size < 1:
        raise ValueError("need at least one sample")
    lo, hi = float(s.min()), float(s.max())
    if lo == hi:
        return BimodalLaplacian(pi=1.0, mu1=lo, mu2=lo, b1=_SCALE_FLOOR, b2=_SCALE_FLOOR)
    c1, c2 = lo, hi
    in1 = np.abs(s - c1) <= np.abs(s - c2)
    for _ in range(100):
        if in1.all() or not in1.any():
            break
        n1, n2 = float(s[in1].mean()), float(s[~in1].mean())
        nxt = np.abs(s - n1) <= np.abs(s - n2)
        c1, c2 = n1, n2
        if (nxt == in1).all():
            break
        in1 = nxt
    if in1.all() or not in1.any():
        mu = float(np.median(s))
        b = max(float(np.abs(s - mu).mean()), _SCALE_FLOOR)
        return BimodalLaplacian(pi=1.0, mu1=mu, mu2=mu, b1=b, b2=b)
    s1, s2 = s[in1], s[~in1]
    mu1, mu2 = float(np.median(s1)), float(np.median(s2))
    b1 = max(float(np.abs(s1 - mu1).mean()), _SCALE_FLOOR)
    b2 = max(float(np.abs(s2 - mu2).mean()), _SCALE_FLOOR)
    return BimodalLaplacian(pi=s1.size / s.size, mu1=mu1, mu2=mu2, b1=b1, b2=b2)


def bimodal_select(m: BimodalLaplacian) -> float:
    """Mode with the highest mixture density (ties keep the first mode)."""
    return m.mu1 if bimodal_density(m, m.mu1) >= bimodal_density(m, m.mu2) else m.mu2


def bimodal_fit_and_select(samples) -> float:
    """Fit the mixture and return the disparity of its dominant mode."""
    return bimodal_select(bimodal_fit(samples))


# --- frame-level drivers ---------------------------------------------------

@dataclass(frozen=True)
class MatcherParams:
    """Knobs for the census/SGM matcher."""

    d_max: int = 64
    census_window: tuple[int, int] = DEFAULT_CENSUS_WINDOW
    p1: float | None = None
    p2: float | None = None
    paths: int = 8

    def penalties(self) -> tuple[float, float]:
        dp1, dp2 = default_penalties(census_bits(self.census_window))
        return (self.p1 if self.p1 is not None else dp1,
                self.p2 if self.p2 is not None else dp2)


def frame_volume(img_ref: np.ndarray, img_tgt: np.ndarray, params: MatcherParams) -> CostVolume:
    desc_ref = census_transform(img_ref, params.census_window)
    desc_tgt = census_transform(img_tgt, params.census_window)
    return build_cost_volume(desc_ref, desc_tgt, params.d_max)


def decode_volume(vol: CostVolume, params: MatcherParams) -> DisparityMap:
    p1, p2 = params.penalties()
    return wta_subpixel(sgm_aggregate(vol, p1, p2, params.paths))


def match_pair(img_ref: np.ndarray, img_tgt: np.ndarray, params: MatcherParams) -> DisparityMap:
    """Single-frame census + SGM + sub-pixel WTA."""
    return decode_volume(frame_volume(img_ref, img_tgt, params), params)


def spacetime_match(
    frames_ref: list[np.ndarray], frames_tgt: list[np.ndarray], params: MatcherParams
) -> FusedDisparity:
    """Full space-time pipeline for one matching direction.

    Per-frame volumes are averaged into an accumulated volume. The mean
    disparity comes from fusing per-frame decodes of an even blend of each
    frame's volume with the accumulated one (per-frame evidence anchored by
    the shared accumulation); the variance channel instead fuses unanchored
    per-frame decodes, so surfaces whose appearance decorrelates across
    frames keep a high uncertainty even where smoothing would hide it.
    """
    if len(frames_ref) != len(frames_tgt) or not frames_ref:
        raise ValueError("need equally many non-empty reference/target frames")
    vols = [frame_volume(fr, ft, params) for fr, ft in zip(frames_ref, frames_tgt)]
    acc = accumulate_volumes(vols)
    anchored = []
    for vol in vols:
        blend = CostVolume(
            costs=(0.5 * vol.costs + 0.5 * acc.costs).astype(np.float32),
            frame_count=acc.frame_count,
        )
        anchored.append(decode_volume(blend, params))
    fused = fuse_disparities(anchored)
    if len(vols) > 1:
        p1, p2 = params.penalties()
        solo_params = MatcherParams(
            d_max=params.d_max, census_window=params.census_window,
            p1=p1 * UNCERTAINTY_PENALTY_SCALE, p2=p2 * UNCERTAINTY_PENALTY_SCALE,
            paths=params.paths,
        )
        solo = fuse_disparities([decode_volume(v, solo_params) for v in vols])
        variance = np.maximum(fused.variance, solo.variance)
    else:
        variance = fused.variance
    mean = DisparityMap(values=fused.mean.values, valid=fused.mean.valid, variance=variance)
    return FusedDisparity(mean=mean, variance=variance, per_frame_count=fused.per_frame_count)


def spacetime_match_bidirectional(
    frames_left: list[np.ndarray], frames_right: list[np.ndarray], params: MatcherParams
) -> tuple[FusedDisparity, FusedDisparity]:
    """Left- and right-referenced fused disparities (right via horizontal mirroring)."""
    fused_l = spacetime_match(frames_left, frames_right, params)
    mirror_r = [img[:, ::-1] for img in frames_right]
    mirror_l = [img[:, ::-1] for img in frames_left]
    fused_m = spacetime_match(mirror_r, mirror_l, params)
    mean = DisparityMap(
        values=fused_m.mean.values[:, ::-1],
        valid=fused_m.mean.valid[:, ::-1],
        variance=fused_m.mean.variance[:, ::-1] if fused_m.mean.variance is not None else None,
    )
    fused_r = FusedDisparity(
        mean=mean,
        variance=fused_m.variance[:, ::-1],
        per_frame_count=fused_m.per_frame_count[:, ::-1],
    )
    return fused_l, fused_r
