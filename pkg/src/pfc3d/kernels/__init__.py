"""Hot smoother kernels with backend selection at import time.

The compiled Cython core (`pfc3d.kernels._core`) is used when available;
otherwise the pure-Python/NumPy implementation takes over.  Set PFC3D_PURE=1
to force the pure backend.  Both backends implement the same `sweep` contract
and produce identical floating-point results; `benchmarks/bench_kernels.py`
compares their throughput.
"""

from __future__ import annotations

import os

from .exceptions import SingularLocalSystemError

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "SingularLocalSystemError",
    "get_threads",
    "set_threads",
    "smoother_sweeps",
]

try:
    from . import _core

    HAVE_COMPILED = True
except ImportError:
    _core = None
    HAVE_COMPILED = False

from . import pure

if HAVE_COMPILED and os.environ.get("PFC3D_PURE", "") in ("", "0"):
    _impl = _core
    BACKEND = "compiled"
else:
    _impl = pure
    BACKEND = "pure"

_threads = 1


def set_threads(n: int) -> None:
    """Set the worker count for parallel red-black sweeps (compiled backend)."""
    global _threads
    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    _threads = n


def get_threads() -> int:
    return _threads


def smoother_sweeps(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
                    tau, h, lin, halfc, cubic_mode, sweeps,
                    order="lexicographic"):
    """Run `sweeps` in-place Gauss-Seidel passes on (phi, mu, om).

    cubic_mode 0 is the two-level midpoint step (phik enters the frozen cubic
    coefficient); cubic_mode 1 is the first-order bootstrap step.  `lin` and
    `halfc` are the matching linear coefficient and Laplacian weight of the
    omega equation.
    """
    if sweeps <= 0:
        return
    h2 = h * h
    if order == "lexicographic":
        for _ in range(sweeps):
            _impl.sweep(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
                        tau, h2, lin, halfc, cubic_mode, -1, _threads)
    elif order == "red-black":
        if phi.shape[0] % 2:
            raise ValueError("red-black ordering requires even m")
        for _ in range(sweeps):
            _impl.sweep(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
                        tau, h2, lin, halfc, cubic_mode, 0, _threads)
            _impl.sweep(phi, mu, om, s1, s2, s3, phik, mx, my, mz,
                        tau, h2, lin, halfc, cubic_mode, 1, _threads)
    else:
        raise ValueError(f"unknown smoother order {order!r}")
