"""Exception hierarchy shared across the package."""


class CyclecastError(Exception):
    """Base class for all package errors."""


class InputError(CyclecastError, ValueError):
    """Invalid or malformed input data."""


class WarmupError(InputError):
    """Not enough history to compute a recent historic profile."""


class DimensionError(CyclecastError, ValueError):
    """Incompatible array shapes."""


class ConfigError(CyclecastError, ValueError):
    """Invalid configuration value."""


class NumericError(CyclecastError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class TrainingError(CyclecastError, RuntimeError):
    """Training diverged or was misused."""


class MetricError(CyclecastError, ValueError):
    """A metric is undefined on the given data."""
