"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """Array dimensions do not match what an operation requires."""


class ParameterError(ValueError):
    """An argument value is outside its valid range."""


class DataError(ValueError):
    """A data file or dataset cannot be parsed or fails validation."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given inputs (e.g. single-class labels)."""


class TrainingError(RuntimeError):
    """Training failed, e.g. the loss became non-finite."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""
