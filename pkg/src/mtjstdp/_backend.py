"""Kernel backend selection.

Hot loops are compiled with numba unless ``MTJSTDP_BACKEND=numpy`` is set in
the environment, in which case the same functions run as plain Python/numpy
and the batch integrator switches to its vectorized numpy implementation.
"""

import os

BACKEND = os.environ.get("MTJSTDP_BACKEND", "numba").strip().lower()

if BACKEND not in ("numba", "numpy"):
    raise ImportError(f"MTJSTDP_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")

if BACKEND == "numba":
    try:
        import numba
    except ImportError:  # pragma: no cover
        BACKEND = "numpy"

USE_NUMBA = BACKEND == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("error_model", "numpy")
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
