"""Backend selection for the hot kernels.

Numba is used when importable unless ``KINRES_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs its pure-numpy twin.  The flag
is read once at import time.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled() -> bool:
    return os.environ.get("KINRES_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(func):
    """``numba.njit(cache=True)`` when numba is present, identity otherwise.

    The jitted object is always built when numba is importable so the
    benchmark can compare both paths in one process; ``USE_NUMBA`` only
    decides which path the library dispatches to.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
