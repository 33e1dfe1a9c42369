"""Backend selection for the fit kernels.

The iterative fitting kernels are written once, in njit-compilable numpy,
and compiled with numba when it is importable.  Setting the environment
variable ``DUALTHERM_DISABLE_NUMBA`` to ``1``/``true``/``yes`` before import
forces the pure-numpy interpretation of the same source.  Both paths produce
results that agree to floating-point roundoff, not bit-for-bit, because the
compiled reductions may reassociate sums.
"""

from __future__ import annotations

import os

_TRUTHY = {"1", "true", "yes", "on"}


def _numba_disabled() -> bool:
    return os.environ.get("DUALTHERM_DISABLE_NUMBA", "").strip().lower() in _TRUTHY


USING_NUMBA = False

if not _numba_disabled():
    try:
        from numba import njit as _njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via the env flag instead
        USING_NUMBA = False

if USING_NUMBA:

    def jit(func):
        return _njit(cache=True)(func)

else:

    def jit(func):
        return func


def backend_name() -> str:
    """Return ``"numba"`` or ``"numpy"`` depending on the active backend."""
    return "numba" if USING_NUMBA else "numpy"
