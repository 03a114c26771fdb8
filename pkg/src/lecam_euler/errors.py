"""Exception and warning types shared across the package."""


class InvalidGridError(ValueError):
    """Time grid is empty, not strictly increasing, or does not start at 0."""


class GridMismatchError(ValueError):
    """A path's grid does not contain the sampling times t_i = i*h."""


class HorizonError(ValueError):
    """A time change or path was queried beyond its horizon."""


class InsufficientSamplesError(ValueError):
    """Too few Monte Carlo replicates to form an estimate with a standard error."""


class ConfigError(ValueError):
    """Invalid configuration document. ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ModelBoundsWarning(UserWarning):
    """A path visited states where the certified model constants do not hold."""
