"""Benchmark metric suite: stereo error rates, scale-shift-aligned monocular
metrics, material/occlusion stratification, resolution alignment, and
label-quality checks (plane residuals, depth inlier comparison).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import DepthMap, DisparityMap
from .errors import DegenerateRegionError, EmptyStratumError, ResolutionError, ShapeError
from .labels import MaterialMask

BAD_THRESHOLDS = (2.0, 4.0, 6.0, 8.0)
DELTA_THRESHOLDS = (1.05, 1.15, 1.25)

ALIGN_DEPTH = "depth"
ALIGN_INVDEPTH = "invdepth"


@dataclass(frozen=True)
class StereoStats:
    """Disparity error rates over one stratum.

    Prediction-invalid pixels count against every bad-tau rate but are
    excluded from MAE/RMSE; their count is reported.
    """

    bad2: float
    bad4: float
    bad6: float
    bad8: float
    mae: float
    rmse: float
    count: int
    pred_invalid: int


@dataclass(frozen=True)
class MonoStats:
    """Depth accuracy over one stratum (prediction already aligned)."""

    delta105: float
    delta115: float
    delta125: float
    mae: float
    abs_rel: float
    rmse: float
    count: int
    excluded_nonpositive: int


@dataclass(frozen=True)
class EvalRecord:
    stratum: str
    stereo: StereoStats | None = None
    mono: MonoStats | None = None
    empty: bool = False


@dataclass(frozen=True)
class EvalReport:
    records: tuple[EvalRecord, ...]

    def find(self, stratum: str) -> EvalRecord:
        for rec in self.records:
            if rec.stratum == stratum:
                return rec
        raise KeyError(stratum)


def _eval_mask(gt_valid: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    if mask is None:
        return gt_valid
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != gt_valid.shape:
        raise ShapeError("mask shape mismatch")
    return gt_valid & mask


def stereo_metrics(pred: DisparityMap, gt: DisparityMap, mask: np.ndarray | None = None) -> StereoStats:
    """bad-tau percentages plus MAE/RMSE over ground-truth-valid pixels."""
    if pred.values.shape != gt.values.shape:
        raise ShapeError("prediction/ground-truth shapes differ")
    ev = _eval_mask(gt.valid, mask)
    n = int(ev.sum())
    if n == 0:
        raise EmptyStratumError("no evaluable pixels")
    have_pred = ev & pred.valid
    missing = n - int(have_pred.sum())
    err = np.abs(pred.values[have_pred] - gt.values[have_pred])
    bads = [100.0 * (float((err > tau).sum()) + missing) / n for tau in BAD_THRESHOLDS]
    if err.size:
        mae = float(err.mean())
        rmse = float(np.sqrt((err * err).mean()))
    else:
        mae = rmse = float("nan")
    return StereoStats(
        bad2=bads[0], bad4=bads[1], bad6=bads[2], bad8=bads[3],
        mae=mae, rmse=rmse, count=n, pred_invalid=missing,
    )


def mono_metrics(pred: np.ndarray, gt: DepthMap, mask: np.ndarray | None = None) -> MonoStats:
    """delta-threshold accuracies, MAE, Abs Rel, RMSE over an aligned depth prediction.

    Non-positive or non-finite aligned predictions are excluded from the
    metrics and counted.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != gt.values.shape:
        raise ShapeError("prediction/ground-truth shapes differ")
    ev = _eval_mask(gt.valid, mask)
    n = int(ev.sum())
    if n == 0:
        raise EmptyStratumError("no evaluable pixels")
    usable = ev & np.isfinite(pred) & (pred > 0)
    excluded = n - int(usable.sum())
    p = pred[usable]
    g = gt.values[usable]
    if p.size == 0:
        raise EmptyStratumError("all aligned predictions non-positive")
    ratio = np.maximum(p / g, g / p)
    deltas = [100.0 * float((ratio < t).sum()) / p.size for t in DELTA_THRESHOLDS]
    err = np.abs(p - g)
    return MonoStats(
        delta105=deltas[0], delta115=deltas[1], delta125=deltas[2],
        mae=float(err.mean()),
        abs_rel=float((err / g).mean()),
        rmse=float(np.sqrt((err * err).mean())),
        count=n,
        excluded_nonpositive=excluded,
    )


def scale_shift_align(
    pred: np.ndarray, gt: DepthMap, mask: np.ndarray | None = None
) -> tuple[float, float, np.ndarray, bool]:
    """Closed-form least-squares affine fit of the prediction onto ground truth.

    Returns (scale, shift, aligned prediction, degenerate flag); a constant
    prediction is flagged degenerate and mapped to the ground-truth mean.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != gt.values.shape:
        raise ShapeError("prediction/ground-truth shapes differ")
    ev = _eval_mask(gt.valid, mask) & np.isfinite(pred)
    n = int(ev.sum())
    if n < 2:
        raise EmptyStratumError("need at least two evaluable pixels for alignment")
    p = pred[ev]
    g = gt.values[ev]
    sp = p.sum()
    spp = (p * p).sum()
    det = n * spp - sp * sp
    mean_p2 = spp / n
    if det <= 1e-12 * max(mean_p2, 1e-300) * n * n:
        s, t = 0.0, float(g.mean())
        return s, t, np.full_like(pred, t), True
    spg = (p * g).sum()
    sg = g.sum()
    s = (n * spg - sp * sg) / det
    t = (spp * sg - sp * spg) / det
    return float(s), float(t), s * pred + t, False


def align_prediction(
    pred: np.ndarray, gt: DepthMap, mask: np.ndarray | None = None, space: str = ALIGN_DEPTH
) -> tuple[np.ndarray, bool]:
    """Scale-shift alignment in depth (default) or inverse-depth space."""
    if space == ALIGN_DEPTH:
        _, _, aligned, degenerate = scale_shift_align(pred, gt, mask)
        return aligned, degenerate
    if space != ALIGN_INVDEPTH:
        raise ValueError(f"unknown alignment space {space!r}")
    pred = np.asarray(pred, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_pred = np.where(pred > 0, 1.0 / pred, np.nan)
        inv_gt_vals = np.where(gt.valid & (gt.values > 0), 1.0 / gt.values, 0.0)
    inv_gt = DepthMap(values=inv_gt_vals, valid=gt.valid & (gt.values > 0))
    _, _, aligned_inv, degenerate = scale_shift_align(inv_pred, inv_gt, mask)
    with np.errstate(divide="ignore", invalid="ignore"):
        aligned = np.where(aligned_inv > 0, 1.0 / aligned_inv, np.nan)
    return aligned, degenerate


_STRATA_CLASSES = (0, 1, 2, 3)


def stratify(
    pred,
    gt,
    material: MaterialMask | None = None,
    consistency: np.ndarray | None = None,
    kind: str = "stereo",
) -> EvalReport:
    """Per-stratum evaluation: All, Cons (consistency mask), and material classes.

    ``kind`` selects disparity (stereo) or pre-aligned depth (mono) metrics;
    empty strata are flagged rather than fabricated.
    """
    if kind not in ("stereo", "mono"):
        raise ValueError(f"kind must be stereo|mono, got {kind!r}")

    def run(mask: np.ndarray | None, name: str) -> EvalRecord:
        try:
            if kind == "stereo":
                return EvalRecord(stratum=name, stereo=stereo_metrics(pred, gt, mask))
            return EvalRecord(stratum=name, mono=mono_metrics(pred, gt, mask))
        except EmptyStratumError:
            return EvalRecord(stratum=name, empty=True)

    records = [run(None, "All")]
    if consistency is not None:
        records.append(run(consistency, "Cons"))
    if material is not None:
        if material.labels.shape != gt.values.shape:
            raise ShapeError("material mask shape mismatch")
        for cls in _STRATA_CLASSES:
            records.append(run(material.class_mask(cls), f"Class {cls}"))
    return EvalReport(records=tuple(records))


def _nearest_upsample(arr: np.ndarray, k: int) -> np.ndarray:
    return np.repeat(np.repeat(arr, k, axis=0), k, axis=1)


def prepare_resolutions(pred, gt, mode: str = "full", is_disparity: bool = True):
    """Resolution alignment before metric computation.

    full: nearest-upsample the prediction by the integer factor to the
    ground-truth grid, scaling disparity values by the same factor. quarter:
    nearest-downsample ground truth by 4 (values /4 for disparity), then
    upsample the prediction to that grid. Depth values are never rescaled.
    """
    if mode not in ("full", "quarter"):
        raise ValueError(f"mode must be full|quarter, got {mode!r}")
    map_cls = DisparityMap if is_disparity else DepthMap
    if mode == "quarter":
        g_vals = gt.values[::4, ::4]
        g_valid = gt.valid[::4, ::4]
        if is_disparity:
            g_vals = g_vals / 4.0
        gt = map_cls(values=g_vals, valid=g_valid)
    if (pred.width, pred.height) == (gt.width, gt.height):
        return pred, gt
    if pred.width < gt.width:
        if gt.width % pred.width or gt.height % pred.height:
            raise ResolutionError(
                f"ground truth {gt.width}x{gt.height} is not an integer multiple of "
                f"prediction {pred.width}x{pred.height}"
            )
        kx, ky = gt.width // pred.width, gt.height // pred.height
        if kx != ky:
            raise ResolutionError(f"anisotropic resolution factors {kx} vs {ky}")
        values = _nearest_upsample(pred.values, kx)
        if is_disparity:
            values = values * kx
        pred = map_cls(values=values, valid=_nearest_upsample(pred.valid, kx))
    else:
        # full-resolution prediction against a downsampled ground truth
        if pred.width % gt.width or pred.height % gt.height:
            raise ResolutionError(
                f"prediction {pred.width}x{pred.height} is not an integer multiple of "
                f"ground truth {gt.width}x{gt.height}"
            )
        kx, ky = pred.width // gt.width, pred.height // gt.height
        if kx != ky:
            raise ResolutionError(f"anisotropic resolution factors {kx} vs {ky}")
        values = pred.values[::ky, ::kx]
        if is_disparity:
            values = values / kx
        pred = map_cls(values=values, valid=pred.valid[::ky, ::kx])
    return pred, gt


def plane_fit_residual(disp: DisparityMap, region: np.ndarray) -> float:
    """RMS residual of the least-squares plane d = a*u + b*v + c over a region."""
    region = np.asarray(region, dtype=bool)
    if region.shape != disp.values.shape:
        raise ShapeError("region shape mismatch")
    sel = region & disp.valid
    ys, xs = np.nonzero(sel)
    if xs.size < 3:
        raise DegenerateRegionError(f"plane fit needs >= 3 pixels, got {xs.size}")
    u = xs - xs.mean()
    v = ys - ys.mean()
    a = np.stack([u, v, np.ones_like(u, dtype=np.float64)], axis=-1)
    d = disp.values[ys, xs]
    if np.linalg.matrix_rank(a) < 3:
        raise DegenerateRegionError("region is collinear; plane fit is rank-deficient")
    coef, *_ = np.linalg.lstsq(a, d, rcond=None)
    res = a @ coef - d
    return float(np.sqrt((res * res).mean()))


def depth_inlier_compare(depth_a: DepthMap, depth_b: DepthMap, thresh: float) -> tuple[float, float]:
    """Share of mutually valid pixels within ``thresh`` meters, and their RMSE."""
    if depth_a.values.shape != depth_b.values.shape:
        raise ShapeError("depth map shapes differ")
    both = depth_a.valid & depth_b.valid
    n = int(both.sum())
    if n == 0:
        raise EmptyStratumError("no mutually valid pixels")
    diff = np.abs(depth_a.values[both] - depth_b.values[both])
    inlier = diff < thresh
    pct = 100.0 * float(inlier.sum()) / n
    if inlier.any():
        d = diff[inlier]
        rmse = float(np.sqrt((d * d).mean()))
    else:
        rmse = float("nan")
    return pct, rmse


# --- report formatting ---------------------------------------------------------

_STEREO_FIELDS = ("bad2", "bad4", "bad6", "bad8", "mae", "rmse", "count", "pred_invalid")
_MONO_FIELDS = ("delta105", "delta115", "delta125", "mae", "abs_rel", "rmse",
                "count", "excluded_nonpositive")


def report_to_text(report: EvalReport) -> str:
    """One record per line: ``stratum=<name> <field>=<value> ...`` in fixed order."""
    lines = []
    for rec in report.records:
        parts = [f"stratum={rec.stratum.replace(' ', '_')}"]
        if rec.empty:
            parts.append("empty=1")
        elif rec.stereo is not None:
            parts.append("kind=stereo")
            for f in _STEREO_FIELDS:
                v = getattr(rec.stereo, f)
                parts.append(f"{f}={v}" if isinstance(v, int) else f"{f}={v:.6f}")
        elif rec.mono is not None:
            parts.append("kind=mono")
            for f in _MONO_FIELDS:
                v = getattr(rec.mono, f)
                parts.append(f"{f}={v}" if isinstance(v, int) else f"{f}={v:.6f}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def report_to_table(report: EvalReport) -> str:
    """Human-oriented fixed-width table for standard output."""
    out = []
    stereo = any(r.stereo for r in report.records)
    if stereo:
        out.append(f"{'stratum':<10}{'bad2':>8}{'bad4':>8}{'bad6':>8}{'bad8':>8}"
                   f"{'MAE':>9}{'RMSE':>9}{'px':>10}")
    else:
        out.append(f"{'stratum':<10}{'d1.05':>8}{'d1.15':>8}{'d1.25':>8}"
                   f"{'MAE':>9}{'AbsRel':>9}{'RMSE':>9}{'px':>10}")
    for rec in report.records:
        if rec.empty:
            out.append(f"{rec.stratum:<10}{'(empty)':>8}")
        elif rec.stereo:
            s = rec.stereo
            out.append(f"{rec.stratum:<10}{s.bad2:>8.2f}{s.bad4:>8.2f}{s.bad6:>8.2f}"
                       f"{s.bad8:>8.2f}{s.mae:>9.3f}{s.rmse:>9.3f}{s.count:>10}")
        elif rec.mono:
            m = rec.mono
            out.append(f"{rec.stratum:<10}{m.delta105:>8.2f}{m.delta115:>8.2f}{m.delta125:>8.2f}"
                       f"{m.mae:>9.4f}{m.abs_rel:>9.4f}{m.rmse:>9.4f}{m.count:>10}")
    return "\n".join(out) + "\n"
