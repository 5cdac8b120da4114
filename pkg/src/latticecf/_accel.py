"""Optional numba acceleration.

Kernels are written once in a numba-compatible subset of Python/numpy.
``njit`` compiles them when numba is importable and the environment
variable ``LATTICECF_DISABLE_NUMBA`` is not set to a truthy value;
otherwise the plain Python function is returned unchanged.
"""
import os

DISABLE_ENV = "LATTICECF_DISABLE_NUMBA"

try:
    import numba as _numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAS_NUMBA = False


def numba_requested() -> bool:
    value = os.environ.get(DISABLE_ENV, "").strip().lower()
    return value not in ("1", "true", "yes", "on")


USE_NUMBA = HAS_NUMBA and numba_requested()


def compile_kernel(func):
    """Return a compiled version of ``func`` (or ``func`` itself without numba)."""
    if not HAS_NUMBA:
        return func
    return _numba.njit(cache=True, nogil=True)(func)


def njit(func):
    """Decorator honouring the env flag at import time."""
    if USE_NUMBA:
        return compile_kernel(func)
    return func
