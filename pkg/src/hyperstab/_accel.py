"""numba switch.

Kernels are compiled with ``numba.njit`` unless ``HYPERSTAB_NO_JIT`` is set to
a truthy value or numba cannot be imported; in that case the pure-numpy
implementations in :mod:`hyperstab.kernels` are used.
"""

import os

_FLAG = os.environ.get("HYPERSTAB_NO_JIT", "").strip().lower()
NO_JIT = _FLAG not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NO_JIT


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)
