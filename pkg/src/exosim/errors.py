"""Exception types raised across the package."""


class ExosimError(Exception):
    """Base class for all package errors."""


class ConfigError(ExosimError, ValueError):
    pass


class NonFiniteState(ExosimError, FloatingPointError):
    pass


class ElongationOutOfRange(ExosimError, ValueError):
    pass


class DegenerateGeometry(ExosimError, ValueError):
    pass


class StrokeOutOfRange(ExosimError, ValueError):
    pass


class InsufficientData(ExosimError, ValueError):
    pass


class GeometryCollapse(ExosimError, ValueError):
    pass


class OutOfCalibratedRange(ExosimError, ValueError):
    pass


class InvalidWall(ExosimError, ValueError):
    pass


class FitDiverged(ExosimError, RuntimeError):
    pass


class InvalidBand(ExosimError, ValueError):
    pass


class InvalidCutoff(ExosimError, ValueError):
    pass


class SensorFault(ExosimError, ValueError):
    pass


class SimulationError(ExosimError, RuntimeError):
    """Wraps a module error raised inside a time loop, with the step index."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
