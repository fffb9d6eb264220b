"""Optional numba acceleration with a pure-numpy fallback.

The hot kernels in :mod:`multilift.kernels` are written as plain
numpy-compatible functions and decorated with :func:`maybe_njit`.  When the
environment variable ``MULTILIFT_NUMBA`` is unset or truthy ("1", "on",
"true", "yes") and numba imports cleanly, the decorator is
``numba.njit(cache=True, ...)``.  Setting ``MULTILIFT_NUMBA=0`` (or "off",
"false", "no") selects the pure-numpy path: the functions are returned
untouched.

Either way the numerical results are identical; only the speed differs.  The
``multilift bench`` subcommand measures the gap on this machine.
"""

import os

_FALSY = {"0", "off", "false", "no"}


def _env_wants_numba() -> bool:
    return os.environ.get("MULTILIFT_NUMBA", "1").strip().lower() not in _FALSY


USE_NUMBA = False
if _env_wants_numba():
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise.

    Usable both bare (``@maybe_njit``) and with options
    (``@maybe_njit(cache=True)``), like ``numba.njit`` itself.
    """
    if USE_NUMBA:
        from numba import njit

        return njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


def py_func_of(fn):
    """Return the pure-Python implementation backing ``fn``.

    For a numba dispatcher that is ``fn.py_func``; for an undecorated
    function it is ``fn`` itself.  Used by the benchmark and the
    jitted-vs-fallback equality tests.
    """
    return getattr(fn, "py_func", fn)
