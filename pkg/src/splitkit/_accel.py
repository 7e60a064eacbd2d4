"""Switch between numba-compiled kernels and the pure-numpy fallback.

Set ``SPLITKIT_DISABLE_NUMBA=1`` before import to force the numpy path.
"""
import os

_FLAG = os.environ.get("SPLITKIT_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    Compiled kernels release the GIL so the solver can farm point blocks out
    to a thread pool.
    """
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True, error_model="numpy")(func)


def backend():
    return "numba" if USE_NUMBA else "numpy"
