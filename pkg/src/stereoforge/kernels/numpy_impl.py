"""Pure-numpy kernel implementations (fallback backend).

Semantics must match ``numba_impl`` bit-for-bit on integer kernels and to
float32 rounding on the aggregations; the parity test enforces this.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

OOR_COST = 64.0  # Hamming cost for targets outside the scanline (uint64 bit width)

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


def census_transform(img: np.ndarray, win_w: int = 9, win_h: int = 7) -> np.ndarray:
    """Census descriptor per pixel: bit k set iff the k-th window neighbor < center.

    Bits are ordered row-major over the window, center skipped; borders use
    edge clamping. Returns uint64 (window must hold at most 65 cells).
    """
    img = np.ascontiguousarray(img, dtype=np.float32)
    h, w = img.shape
    rx, ry = win_w // 2, win_h // 2
    padded = np.pad(img, ((ry, ry), (rx, rx)), mode="edge")
    out = np.zeros((h, w), dtype=np.uint64)
    bit = np.uint64(0)
    one = np.uint64(1)
    for wy in range(win_h):
        for wx in range(win_w):
            if wy == ry and wx == rx:
                continue
            neighbor = padded[wy : wy + h, wx : wx + w]
            out |= (neighbor < img).astype(np.uint64) << bit
            bit += one
    return out


def _popcount64(arr: np.ndarray) -> np.ndarray:
    bytes_view = arr.view(np.uint8).reshape(arr.shape + (8,))
    return _POPCOUNT8[bytes_view].sum(axis=-1, dtype=np.uint32)


def hamming_cost_volume(desc_ref: np.ndarray, desc_tgt: np.ndarray, d_max: int) -> np.ndarray:
    """Cost volume (H, W, d_max+1): Hamming(desc_ref[y,x], desc_tgt[y,x-d])."""
    h, w = desc_ref.shape
    vol = np.full((h, w, d_max + 1), OOR_COST, dtype=np.float32)
    for d in range(d_max + 1):
        if d >= w:
            break
        x = desc_ref[:, d:] ^ desc_tgt[:, : w - d]
        vol[:, d:, d] = _popcount64(x)
    return vol


def _sgm_step(prev: np.ndarray, cost_slice: np.ndarray, p1: float, p2: float) -> np.ndarray:
    """One DP step: prev and cost_slice are (N, D) float32."""
    m = prev.min(axis=1)
    cand = prev.copy()
    cand[:, 1:] = np.minimum(cand[:, 1:], prev[:, :-1] + p1)
    cand[:, :-1] = np.minimum(cand[:, :-1], prev[:, 1:] + p1)
    np.minimum(cand, (m + p2)[:, None], out=cand)
    return (cost_slice + cand - m[:, None]).astype(np.float32)


def sgm_aggregate(cost: np.ndarray, p1: float, p2: float, num_paths: int = 8) -> np.ndarray:
    """Multi-directional DP smoothing of a cost volume, summed over paths.

    Scanline recurrence per direction r:
    L(p,d) = C(p,d) + min(L(q,d), L(q,d+-1)+P1, min_k L(q,k)+P2) - min_k L(q,k)
    with q the predecessor along r.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float32)
    h, w, _ = cost.shape
    p1 = np.float32(p1)
    p2 = np.float32(p2)
    if num_paths == 4:
        dirs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    elif num_paths == 8:
        dirs = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]
    else:
        raise ValueError(f"num_paths must be 4 or 8, got {num_paths}")
    agg = np.zeros_like(cost)
    for dx, dy in dirs:
        if dx != 0:
            xs = range(w) if dx > 0 else range(w - 1, -1, -1)
            prev = None
            for x in xs:
                sl = cost[:, x, :]
                if prev is None:
                    cur = sl.copy()
                elif dy == 0:
                    cur = _sgm_step(prev, sl, p1, p2)
                elif dy > 0:
                    # predecessor row is y - dy; border rows restart at raw cost
                    cur = np.empty_like(sl)
                    cur[0, :] = sl[0, :]
                    cur[1:, :] = _sgm_step(prev[:-1, :], sl[1:, :], p1, p2)
                else:
                    cur = np.empty_like(sl)
                    cur[-1, :] = sl[-1, :]
                    cur[:-1, :] = _sgm_step(prev[1:, :], sl[:-1, :], p1, p2)
                agg[:, x, :] += cur
                prev = cur
        else:
            ys = range(h) if dy > 0 else range(h - 1, -1, -1)
            prev = None
            for y in ys:
                sl = cost[y, :, :]
                cur = sl.copy() if prev is None else _sgm_step(prev, sl, p1, p2)
                agg[y, :, :] += cur
                prev = cur
    return agg


def joint_bilateral(
    values: np.ndarray,
    valid: np.ndarray,
    guide: np.ndarray,
    radius: int,
    sigma_color: float,
    sigma_dist: float,
) -> np.ndarray:
    """Joint bilateral filter; invalid pixels neither contribute nor get filled."""
    values = np.asarray(values, dtype=np.float64)
    guide = np.asarray(guide, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    h, w = values.shape
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    inv_2sc = 1.0 / (2.0 * sigma_color * sigma_color)
    inv_2sd = 1.0 / (2.0 * sigma_dist * sigma_dist)
    vals0 = np.where(valid, values, 0.0)
    for dy in range(-radius, radius + 1):
        y_src = np.clip(np.arange(h) + dy, 0, h - 1)
        row_in_range = (np.arange(h) + dy >= 0) & (np.arange(h) + dy < h)
        for dx in range(-radius, radius + 1):
            x_src = np.clip(np.arange(w) + dx, 0, w - 1)
            col_in_range = (np.arange(w) + dx >= 0) & (np.arange(w) + dx < w)
            in_range = row_in_range[:, None] & col_in_range[None, :]
            n_valid = valid[y_src[:, None], x_src[None, :]] & in_range
            dg = guide - guide[y_src[:, None], x_src[None, :]]
            wgt = np.exp(-(dg * dg) * inv_2sc) * np.exp(-(dx * dx + dy * dy) * inv_2sd)
            wgt = np.where(n_valid, wgt, 0.0)
            num += wgt * vals0[y_src[:, None], x_src[None, :]]
            den += wgt
    out = np.where(valid & (den > 0), num / np.maximum(den, 1e-300), values)
    return out
