"""Select between numba-compiled kernels and the plain Python/numpy path.

Set ``QDDHAND_NUMBA=0`` before import to run every kernel uncompiled. The two
paths share the same source, so the fallback is also the reference used by
``benchmarks/bench_kernels.py``.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

USE_NUMBA = numba is not None and os.environ.get("QDDHAND_NUMBA", "1").lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(func):
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend_name():
    return "numba" if USE_NUMBA else "python"
