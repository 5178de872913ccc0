"""Kernel backend selection.

The hot loops (relaxation sweeps and residual evaluation) exist twice: a numba
``@njit`` version and a pure-numpy version.  ``DEGOB_BACKEND=numpy`` (or a
missing numba install) selects the numpy path; anything else selects numba.
"""

import logging
import os

logger = logging.getLogger(__name__)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _requested():
    value = os.environ.get("DEGOB_BACKEND", "numba").strip().lower()
    if value not in ("numba", "numpy"):
        logger.warning("unknown DEGOB_BACKEND=%r, using numba", value)
        value = "numba"
    if value == "numba" and not HAVE_NUMBA:
        logger.warning("numba not importable, falling back to numpy kernels")
        value = "numpy"
    return value


_state = {"backend": _requested()}


def get_backend():
    return _state["backend"]


def set_backend(name):
    """Switch backends at runtime (used by the benchmark and parity tests)."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _state["backend"] = name


def njit(*args, **kwargs):
    """``numba.njit`` with project defaults, or an identity decorator."""
    opts = dict(cache=True, nogil=True)
    opts.update(kwargs)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    if args and callable(args[0]):
        return numba.njit(**opts)(args[0])
    return numba.njit(*args, **opts)


def max_threads():
    """Parallelism cap from ``DEGOB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("DEGOB_THREADS", "1")))
    except ValueError:
        return 1
