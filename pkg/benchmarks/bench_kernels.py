"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size WxH] [--d-max N] [--repeat K]

Both backends are imported directly (the STEREOFORGE_BACKEND env variable is
bypassed) so one process can time them side by side. The numba numbers
exclude JIT compilation: every kernel is warmed once before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stereoforge.kernels import numba_impl, numpy_impl


def time_call(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", default="512x384")
    ap.add_argument("--d-max", dest="d_max", type=int, default=96)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    w, h = (int(x) for x in args.size.lower().split("x"))

    rng = np.random.default_rng(7)
    img = rng.uniform(0, 255, size=(h, w)).astype(np.float32)
    guide = rng.uniform(0, 255, size=(h, w))
    values = rng.uniform(2, 60, size=(h, w))
    valid = rng.uniform(size=(h, w)) > 0.05

    desc = numpy_impl.census_transform(img, 9, 7)
    cost = numpy_impl.hamming_cost_volume(desc, desc, args.d_max)

    cases = [
        ("census 9x7", (img, 9, 7), "census_transform"),
        ("cost volume", (desc, desc, args.d_max), "hamming_cost_volume"),
        ("sgm 8-path", (cost, 7.75, 31.0, 8), "sgm_aggregate"),
        ("bilateral 35x35", (values, valid, guide, 17, 5.0, 50.0), "joint_bilateral"),
    ]

    print(f"kernel benchmark at {w}x{h}, d_max={args.d_max}, best of {args.repeat}")
    print(f"{'kernel':<18}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, call_args, attr in cases:
        nb_fn = getattr(numba_impl, attr)
        np_fn = getattr(numpy_impl, attr)
        nb_fn(*call_args)  # warm the jit
        t_nb = time_call(nb_fn, *call_args, repeat=args.repeat)
        t_np = time_call(np_fn, *call_args, repeat=args.repeat)
        print(f"{name:<18}{t_nb * 1e3:>10.1f}ms{t_np * 1e3:>10.1f}ms{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
