"""Kernel backend selection.

Hot numeric kernels ship in two flavors: a numba ``@njit`` build and a
pure-numpy twin.  The active flavor is chosen once at import time from the
``UNIMESH_NUMBA`` environment variable:

* ``0`` / ``false`` / ``off`` / ``no``  -> force the numpy path
* ``1`` / ``true`` / ``on`` / ``yes``   -> require numba (ImportError if absent)
* unset / anything else                 -> numba if importable, numpy otherwise

Results are deterministic within a backend; the two backends agree to
floating-point roundoff (see benchmarks/bench_kernels.py, which runs both).
"""

from __future__ import annotations

import os

_FALSY = ("0", "false", "off", "no")
_TRUTHY = ("1", "true", "on", "yes")

_flag = os.environ.get("UNIMESH_NUMBA", "auto").strip().lower()

NUMBA_AVAILABLE = False
try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:
    pass

if _flag in _FALSY:
    NUMBA_ENABLED = False
elif _flag in _TRUTHY:
    if not NUMBA_AVAILABLE:
        raise ImportError("UNIMESH_NUMBA=1 but numba is not importable")
    NUMBA_ENABLED = True
else:
    NUMBA_ENABLED = NUMBA_AVAILABLE


def jit(fn):
    """Compile ``fn`` with numba when available; otherwise return it unchanged.

    Kernels passed here are written in numba-compatible scalar-loop style so
    the undecorated function remains a valid (slow) reference implementation.
    No fastmath: reassociation would break cross-run determinism.
    """
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
