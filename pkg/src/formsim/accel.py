"""Optional numba acceleration for the hot simulation kernels.

The compiled kernels and the plain numpy engine compute the same thing;
``FORMSIM_DISABLE_JIT=1`` (or a missing numba install) selects the pure
numpy path everywhere.  ``benchmarks/bench_jit.py`` compares the two.
"""

import os


def _disabled_by_env():
    for var in ("FORMSIM_DISABLE_JIT", "NUMBA_DISABLE_JIT"):
        if os.environ.get(var, "").strip() not in ("", "0"):
            return True
    return False


try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

JIT_ENABLED = HAS_NUMBA and not _disabled_by_env()


def maybe_jit(fn=None, **kwargs):
    """Apply ``numba.njit`` when acceleration is enabled, else return fn as is.

    Usable bare (``@maybe_jit``) or with numba keyword arguments
    (``@maybe_jit(cache=True)``).
    """
    if fn is None:
        def wrap(f):
            return maybe_jit(f, **kwargs)

        return wrap
    if not JIT_ENABLED:
        return fn
    kwargs.setdefault("cache", True)
    return numba.njit(**kwargs)(fn)
