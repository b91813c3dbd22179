"""Exception hierarchy shared by all modules."""


class ReachError(Exception):
    """Base class for every error raised by scsreach."""


class InvalidSpec(ReachError, ValueError):
    pass


class OutOfRange(ReachError, IndexError):
    pass


class NonFinitePoint(ReachError, ValueError):
    pass


class NonFiniteField(ReachError, FloatingPointError):
    """Raised when a field contains NaN/Inf, e.g. after an unstable solver step."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DimMismatch(ReachError, ValueError):
    pass


class GridMismatch(ReachError, ValueError):
    pass


class AllZeroDynamics(ReachError, ValueError):
    pass


class StepCapExceeded(ReachError, RuntimeError):
    pass


class OutOfDomain(ReachError, ValueError):
    pass


class UncoverableTarget(ReachError, ValueError):
    pass


class BudgetExceeded(ReachError, ValueError):
    pass


class ConfigError(ReachError, ValueError):
    """Invalid run configuration. ``key`` names the offending config entry."""

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
