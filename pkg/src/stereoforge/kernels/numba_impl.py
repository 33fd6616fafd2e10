"""Numba-jitted kernel implementations (default backend when numba imports).

Kept semantically identical to ``numpy_impl``; compiled artifacts are cached
on disk so repeated runs skip JIT cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

OOR_COST = 64.0

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@njit(cache=True, inline="always")
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


@njit(cache=True)
def _census_core(img, win_w, win_h):
    h, w = img.shape
    rx = win_w // 2
    ry = win_h // 2
    out = np.zeros((h, w), dtype=np.uint64)
    for y in range(h):
        for x in range(w):
            center = img[y, x]
            desc = np.uint64(0)
            bit = np.uint64(0)
            for wy in range(-ry, ry + 1):
                yy = min(max(y + wy, 0), h - 1)
                for wx in range(-rx, rx + 1):
                    if wy == 0 and wx == 0:
                        continue
                    xx = min(max(x + wx, 0), w - 1)
                    if img[yy, xx] < center:
                        desc |= np.uint64(1) << bit
                    bit += np.uint64(1)
            out[y, x] = desc
    return out


def census_transform(img: np.ndarray, win_w: int = 9, win_h: int = 7) -> np.ndarray:
    img = np.ascontiguousarray(img, dtype=np.float32)
    return _census_core(img, win_w, win_h)


@njit(cache=True)
def _cost_volume_core(desc_ref, desc_tgt, d_max, oor_cost):
    h, w = desc_ref.shape
    vol = np.empty((h, w, d_max + 1), dtype=np.float32)
    for y in range(h):
        for x in range(w):
            ref = desc_ref[y, x]
            for d in range(d_max + 1):
                xt = x - d
                if xt < 0:
                    vol[y, x, d] = oor_cost
                else:
                    vol[y, x, d] = np.float32(_popcount64(ref ^ desc_tgt[y, xt]))
    return vol


def hamming_cost_volume(desc_ref: np.ndarray, desc_tgt: np.ndarray, d_max: int) -> np.ndarray:
    return _cost_volume_core(desc_ref, desc_tgt, d_max, np.float32(OOR_COST))


@njit(cache=True)
def _sgm_line(prev, sl, out, p1, p2):
    d_num = sl.shape[0]
    m = prev[0]
    for d in range(1, d_num):
        if prev[d] < m:
            m = prev[d]
    for d in range(d_num):
        best = prev[d]
        if d > 0 and prev[d - 1] + p1 < best:
            best = prev[d - 1] + p1
        if d < d_num - 1 and prev[d + 1] + p1 < best:
            best = prev[d + 1] + p1
        if m + p2 < best:
            best = m + p2
        out[d] = sl[d] + best - m


@njit(cache=True)
def _sgm_core(cost, p1, p2, num_paths):
    h, w, d_num = cost.shape
    agg = np.zeros((h, w, d_num), dtype=np.float32)
    n_dirs = 4 if num_paths == 4 else 8
    dxs = (1, -1, 0, 0, 1, -1, 1, -1)
    dys = (0, 0, 1, -1, 1, -1, -1, 1)
    for k in range(n_dirs):
        dx = dxs[k]
        dy = dys[k]
        if dx != 0:
            prev = np.empty((h, d_num), dtype=np.float32)
            cur = np.empty((h, d_num), dtype=np.float32)
            x = 0 if dx > 0 else w - 1
            first = True
            while 0 <= x < w:
                for y in range(h):
                    yp = y - dy
                    if first or yp < 0 or yp >= h:
                        for d in range(d_num):
                            cur[y, d] = cost[y, x, d]
                    else:
                        _sgm_line(prev[yp], cost[y, x], cur[y], p1, p2)
                for y in range(h):
                    for d in range(d_num):
                        agg[y, x, d] += cur[y, d]
                tmp = prev
                prev = cur
                cur = tmp
                first = False
                x += dx
        else:
            prev = np.empty((w, d_num), dtype=np.float32)
            cur = np.empty((w, d_num), dtype=np.float32)
            y = 0 if dy > 0 else h - 1
            first = True
            while 0 <= y < h:
                for x in range(w):
                    if first:
                        for d in range(d_num):
                            cur[x, d] = cost[y, x, d]
                    else:
                        _sgm_line(prev[x], cost[y, x], cur[x], p1, p2)
                for x in range(w):
                    for d in range(d_num):
                        agg[y, x, d] += cur[x, d]
                tmp = prev
                prev = cur
                cur = tmp
                first = False
                y += dy
    return agg


def sgm_aggregate(cost: np.ndarray, p1: float, p2: float, num_paths: int = 8) -> np.ndarray:
    if num_paths not in (4, 8):
        raise ValueError(f"num_paths must be 4 or 8, got {num_paths}")
    cost = np.ascontiguousarray(cost, dtype=np.float32)
    return _sgm_core(cost, np.float32(p1), np.float32(p2), num_paths)


@njit(cache=True)
def _bilateral_core(values, valid, guide, radius, inv_2sc, spatial):
    h, w = values.shape
    out = values.copy()
    for y in range(h):
        for x in range(w):
            if not valid[y, x]:
                continue
            gc = guide[y, x]
            num = 0.0
            den = 0.0
            for dy in range(-radius, radius + 1):
                yy = y + dy
                if yy < 0 or yy >= h:
                    continue
                for dx in range(-radius, radius + 1):
                    xx = x + dx
                    if xx < 0 or xx >= w:
                        continue
                    if not valid[yy, xx]:
                        continue
                    dg = gc - guide[yy, xx]
                    wgt = np.exp(-(dg * dg) * inv_2sc) * spatial[dy + radius, dx + radius]
                    num += wgt * values[yy, xx]
                    den += wgt
            if den > 0.0:
                out[y, x] = num / den
    return out


def joint_bilateral(
    values: np.ndarray,
    valid: np.ndarray,
    guide: np.ndarray,
    radius: int,
    sigma_color: float,
    sigma_dist: float,
) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.float64)
    guide = np.ascontiguousarray(guide, dtype=np.float64)
    valid = np.ascontiguousarray(valid, dtype=np.bool_)
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    dist2 = coords[:, None] ** 2 + coords[None, :] ** 2
    spatial = np.exp(-dist2 / (2.0 * sigma_dist * sigma_dist))
    return _bilateral_core(
        values, valid, guide, radius,
        1.0 / (2.0 * sigma_color * sigma_color),
        spatial,
    )
