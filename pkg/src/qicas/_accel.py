"""JIT switch shared by every hot kernel.

Kernels are written once as plain numpy-compatible loops; ``jit`` compiles
them with numba unless ``QICAS_DISABLE_NUMBA`` is set to a truthy value or
numba is not importable. Callers that have a vectorised numpy alternative
check ``USE_NUMBA`` and dispatch themselves.
"""

import os

_FLAG = os.environ.get("QICAS_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA = _numba is not None and not DISABLED


def jit(func):
    """Compile ``func`` in nopython mode, or return it untouched."""
    if USE_NUMBA:
        return _numba.njit(cache=True)(func)
    return func
