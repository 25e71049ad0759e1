"""Numba plumbing with a pure-python escape hatch.

Hot kernels in :mod:`bosonlab._kernels` are compiled with ``@njit`` when numba
is importable.  Setting the environment variable ``BOSONLAB_NUMBA=0`` (or
``false``/``off``/``no``) before import skips compilation and runs the same
source as plain python — slower, but bit-identical, which is what the
cross-path tests and the benchmark rely on.
"""

import os

_flag = os.environ.get("BOSONLAB_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "off", "no")

try:
    if not NUMBA_REQUESTED:
        raise ImportError("numba disabled via BOSONLAB_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # Mirror numba's two calling conventions: @njit and @njit(...).
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def python_version(kernel):
    """Return the uncompiled version of a (possibly jitted) kernel."""
    return getattr(kernel, "py_func", kernel)
