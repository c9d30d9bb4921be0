"""Kernel backend selection.

``EXOSIM_KERNELS=numpy`` forces the vectorised numpy kernels; the default is
``numba`` when it can be imported. The choice is fixed at import time.
"""
import os

_requested = os.environ.get("EXOSIM_KERNELS", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"EXOSIM_KERNELS must be 'numba' or 'numpy', got {_requested!r}")

HAVE_NUMBA = False
if _requested == "numba":
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is optional at runtime
        HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"
