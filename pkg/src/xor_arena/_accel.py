"""JIT switch. Set ``XOR_ARENA_NO_NUMBA=1`` to force the pure-numpy kernels."""
import os

try:
    import numba as nb
except ImportError:  # pragma: no cover
    nb = None

USE_NUMBA = nb is not None and os.environ.get("XOR_ARENA_NO_NUMBA", "").lower() not in ("1", "true", "yes")


def njit(*args, **kwargs):
    if nb is None:
        if args and callable(args[0]):
            return args[0]
        return lambda func: func
    return nb.njit(*args, **kwargs)
