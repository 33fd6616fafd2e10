"""Backend dispatch for the hot per-pixel kernels.

Two interchangeable implementations exist: a numba-jitted one and a pure
numpy one. Selection is controlled by the ``STEREOFORGE_BACKEND`` environment
variable: ``auto`` (default, numba when importable), ``numba``, or ``numpy``.
``benchmarks/bench_kernels.py`` compares the two.
"""

import os

_choice = os.environ.get("STEREOFORGE_BACKEND", "auto").lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"STEREOFORGE_BACKEND must be auto|numba|numpy, got {_choice!r}"
    )

if _choice == "numpy":
    from . import numpy_impl as _impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_impl as _impl

BACKEND = _impl.NAME
census_transform = _impl.census_transform
hamming_cost_volume = _impl.hamming_cost_volume
sgm_aggregate = _impl.sgm_aggregate
joint_bilateral = _impl.joint_bilateral

__all__ = [
    "BACKEND",
    "census_transform",
    "hamming_cost_volume",
    "sgm_aggregate",
    "joint_bilateral",
]
