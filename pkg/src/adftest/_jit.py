"""Optional numba acceleration.

Hot kernels are written once in plain Python/numpy and compiled with
``numba.njit`` when available. Set ``ADFTEST_DISABLE_NUMBA=1`` to run the
interpreted path instead (useful for debugging and for the benchmark).
"""
import os

_DISABLED = os.environ.get("ADFTEST_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USING_NUMBA = numba is not None and not _DISABLED


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` or a no-op, depending on ``USING_NUMBA``.

    The returned object always exposes ``py_func`` so callers can reach the
    interpreted implementation regardless of mode.
    """

    def wrap(f):
        if USING_NUMBA:
            return numba.njit(cache=True, **kwargs)(f)
        f.py_func = f
        return f

    if func is not None:
        return wrap(func)
    return wrap
