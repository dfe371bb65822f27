"""Exception hierarchy.

The CLI maps each family onto a process exit code, so library code raises
the most specific class it can.
"""


class UQScaleError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(UQScaleError, ValueError):
    exit_code = 2


class ModelError(UQScaleError, RuntimeError):
    """A vehicle model could not produce a usable result."""

    exit_code = 3


class EstimatorError(UQScaleError, ValueError):
    """Sensitivity estimation or surrogate fitting failed."""

    exit_code = 4


class OptimizerError(UQScaleError, RuntimeError):
    exit_code = 4
