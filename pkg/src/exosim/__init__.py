"""Lifting biomechanics, hydraulic assist and EMG evaluation for a soft spine exosuit.

Hot loops (trajectory integration, batched inverse dynamics, sensor
inversion) run through numba kernels unless ``EXOSIM_KERNELS=numpy``.
"""
__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402,F401
