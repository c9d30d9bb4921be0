"""Dispatch to the active kernel backend (see ``_backend``)."""
from ._backend import BACKEND

if BACKEND == "numba":
    from ._kernels_numba import (  # noqa: F401
        inverse_dynamics_batch,
        rate_limit,
        rk4_integrate,
        sensor_pressure_batch,
        sensor_strain_batch,
    )
else:
    from ._kernels_numpy import (  # noqa: F401
        inverse_dynamics_batch,
        rate_limit,
        rk4_integrate,
        sensor_pressure_batch,
        sensor_strain_batch,
    )

__all__ = [
    "BACKEND",
    "inverse_dynamics_batch",
    "rate_limit",
    "rk4_integrate",
    "sensor_pressure_batch",
    "sensor_strain_batch",
]
