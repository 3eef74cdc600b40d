"""Optional numba acceleration.

Set ``PERBIF_NUMBA=0`` before import to run every kernel as plain Python/numpy.
The flag is read once; the benchmark script toggles it per subprocess.
"""

import os

_flag = os.environ.get("PERBIF_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba as nb
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


def backend() -> str:
    return "numba" if USE_NUMBA else "python"
