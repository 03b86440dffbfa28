"""Exception hierarchy shared by every module of the package."""


class VelShapeError(Exception):
    """Base class for all package errors."""


class InputError(VelShapeError, ValueError):
    """Argument out of range, wrong shape, or otherwise malformed."""


class ModelEvaluationError(VelShapeError):
    """A dynamics model produced non-finite values."""


class DegenerateStateError(VelShapeError):
    """Every projected inertia component vanishes at the requested state."""


class ConfigurationError(VelShapeError):
    """A scenario, policy or model description is inconsistent."""


class ExtensionFailure(VelShapeError):
    """Backward propagation stalled while extending a boundary."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class OutsideSetError(VelShapeError, ValueError):
    """A state lies outside the reach-avoid set it was evaluated against."""
