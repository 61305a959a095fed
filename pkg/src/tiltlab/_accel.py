"""Numba dispatch.

Set ``TILTLAB_DISABLE_NUMBA=1`` to run every kernel through its numpy
fallback. The flag is read once at import time.
"""

import os

_DISABLED = os.environ.get("TILTLAB_DISABLE_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    _njit = None
    HAS_NUMBA = False


def jit(fn):
    """Compile ``fn`` with numba when enabled; otherwise return it as-is."""
    if HAS_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn


def jit_fast(fn):
    """Like ``jit`` but lets min/max reductions vectorize.

    Only reassociation and the no-NaN and signed-zero relaxations are
    enabled: no contraction into FMA and no finite-math assumption, so the
    results stay bit-identical to the numpy path for NaN-free input.
    """
    if HAS_NUMBA:
        return _njit(cache=True, nogil=True, fastmath={"nnan", "nsz", "reassoc"})(fn)
    return fn


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"
