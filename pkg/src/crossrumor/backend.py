"""Kernel backend selection: numba-compiled or pure numpy.

The hot kernels in :mod:`crossrumor.kernels` are plain numpy functions. By
default they are JIT-compiled with numba (cached on disk, so the compile cost
is paid once per machine). Setting the environment variable

    CROSSRUMOR_BACKEND=numpy

forces the uncompiled fallback; ``CROSSRUMOR_BACKEND=numba`` fails loudly if
numba is unavailable instead of silently falling back. The two backends agree
to float64 round-off (not bit-for-bit: BLAS and compiled dot products may
round differently), and each backend is individually deterministic.

Call sites bind late (``backend.gru_layer_forward(...)`` via module attribute
lookup) so tests and the benchmark can swap backends with :func:`use`.
"""

import os

from . import kernels as _kernels

gru_layer_forward = None
gru_layer_backward = None
ACTIVE = "unset"


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def make_kernels(name: str) -> dict:
    """Build the kernel table for an explicit backend name."""
    if name == "numpy":
        return {k: getattr(_kernels, k) for k in _kernels.KERNEL_NAMES}
    if name == "numba":
        import numba

        return {
            k: numba.njit(cache=True)(getattr(_kernels, k))
            for k in _kernels.KERNEL_NAMES
        }
    raise ValueError(f"unknown backend {name!r} (expected 'numpy' or 'numba')")


def use(name: str = "auto") -> str:
    """Select the active backend; returns the resolved name."""
    global ACTIVE, gru_layer_forward, gru_layer_backward
    resolved = name
    if name == "auto":
        resolved = "numba" if numba_available() else "numpy"
    table = make_kernels(resolved)
    gru_layer_forward = table["gru_layer_forward"]
    gru_layer_backward = table["gru_layer_backward"]
    ACTIVE = resolved
    return resolved


use(os.environ.get("CROSSRUMOR_BACKEND", "auto"))
