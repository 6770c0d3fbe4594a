"""Exception hierarchy shared by all modules."""


class OfiLabError(Exception):
    """Base class for package errors."""


class ConfigError(OfiLabError, ValueError):
    """A configuration value is missing or invalid.

    ``key`` names the offending field so the CLI can report it.
    """

    def __init__(self, key, message=None):
        if message is None:
            key, message = None, key
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
        self.reason = message


class InvalidEvent(OfiLabError, ValueError):
    pass


class DomainError(OfiLabError, ValueError):
    pass


class BoundViolation(OfiLabError, ValueError):
    pass


class UnsupportedIncrement(OfiLabError, ValueError):
    pass


class MomentUndefined(OfiLabError, ValueError):
    pass


class NonPositiveIntensity(OfiLabError, ValueError):
    pass


class QuadratureFailure(OfiLabError, ArithmeticError):
    pass


class ScheduleInvalid(OfiLabError, ValueError):
    pass


class EmptyLog(OfiLabError, ValueError):
    pass


class InsufficientData(OfiLabError, ValueError):
    pass


class FitDiverged(OfiLabError, RuntimeError):
    pass


class DegenerateSample(OfiLabError, ValueError):
    pass
