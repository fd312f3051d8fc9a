"""Numba switch.

Set ``VEGLOSS_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. to
compare timings or to debug without JIT compilation.
"""

import os

_disabled = os.environ.get("VEGLOSS_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
