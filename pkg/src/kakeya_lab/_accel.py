"""Numba switch.

Set ``KAKEYA_LAB_NO_NUMBA=1`` to run every kernel on its pure numpy/Python
path.  Results are identical either way; only speed differs.
"""

from __future__ import annotations

import os


def _have_numba() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


HAVE_NUMBA = _have_numba()
USE_NUMBA = HAVE_NUMBA and os.environ.get("KAKEYA_LAB_NO_NUMBA", "").lower() not in ("1", "true", "yes")


def _noop(fn):
    return fn


if HAVE_NUMBA:
    from numba import njit as _njit

    def maybe_njit(fn):
        """Compile ``fn`` with numba; the Python original stays on ``.py_func``."""
        return _njit(cache=True, nogil=True)(fn)
else:  # pragma: no cover - exercised only without numba installed
    maybe_njit = _noop


def jit(fn):
    """``njit`` when numba is enabled, otherwise the function unchanged."""
    return maybe_njit(fn) if USE_NUMBA else fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
