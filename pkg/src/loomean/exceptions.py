"""Exception types shared across the package."""


class EstimationError(RuntimeError):
    """An estimator could not produce a usable result from the given data."""


class DatasetFormatError(ValueError):
    """A dataset file does not follow the expected CSV layout."""


class ConfigError(ValueError):
    """A benchmark configuration is malformed."""
