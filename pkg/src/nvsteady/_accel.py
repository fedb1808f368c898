"""Switch between numba-compiled kernels and the plain numpy path.

Set ``NVSTEADY_DISABLE_NUMBA=1`` before import to run every kernel as
ordinary Python on numpy arrays. Results agree with the compiled path to
rounding; only speed differs.
"""

import os

_FLAG = os.environ.get("NVSTEADY_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USING_NUMBA = numba is not None and _FLAG not in {"1", "true", "yes", "on"}


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching, or the identity decorator."""
    if USING_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
