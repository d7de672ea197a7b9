"""Numba switch.

Set ``FBMNC_DISABLE_JIT=1`` to run every kernel through its pure-numpy
implementation. When numba is not importable the numpy path is used
automatically.
"""

import os

_DISABLED = os.environ.get("FBMNC_DISABLE_JIT", "0").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    _njit = None
    HAS_NUMBA = False

JIT_ENABLED = HAS_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if _njit is not None:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap
