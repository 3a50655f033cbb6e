"""Numba detection and the backend switch.

Set ``WEHRL_LAB_NUMBA=0`` before import to force the pure-numpy path. The
backend can also be flipped at runtime with :func:`use_numba`, which is what
the benchmark and the backend-agreement tests do.
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}


def _env_wants_numba():
    return os.environ.get("WEHRL_LAB_NUMBA", "1").strip().lower() in _TRUTHY


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _dummy_njit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(f):
        return f

    return wrapper


njit = numba.njit if HAVE_NUMBA else _dummy_njit

_state = {"enabled": HAVE_NUMBA and _env_wants_numba()}


def numba_enabled():
    """Return True if the compiled kernels are currently selected."""
    return _state["enabled"]


def use_numba(flag=True):
    """Select the compiled (``True``) or numpy (``False``) kernels.

    Returns the previous setting so callers can restore it.
    """
    previous = _state["enabled"]
    if flag and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable in this environment")
    _state["enabled"] = bool(flag)
    return previous
