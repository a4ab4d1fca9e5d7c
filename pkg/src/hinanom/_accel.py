"""Optional numba acceleration.

Set ``HINANOM_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable.
"""
import os
import warnings


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


def _have_numba():
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


DISABLED = os.environ.get("HINANOM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
HAVE_NUMBA = _have_numba()
USE_NUMBA = HAVE_NUMBA and not DISABLED

if HAVE_NUMBA:
    from numba import njit, prange

    # An outdated TBB only means numba falls back to another threading layer.
    warnings.filterwarnings("ignore", message="The TBB threading layer requires")
else:
    njit = _noop_jit
    prange = range


def set_threads(n):
    """Cap numba worker threads; a no-op on the numpy path."""
    if HAVE_NUMBA and n:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
