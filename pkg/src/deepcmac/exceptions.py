"""Exception types raised across the package."""


class GeometryError(ValueError):
    """Invalid CMAC block geometry (bounds or counts)."""


class NonFiniteInputError(ValueError):
    """An input sample or parameter contained NaN or inf."""


class ShapeMismatchError(ValueError):
    """Arrays whose shapes disagree with the layer/model layout."""


class ZeroVarianceError(ValueError):
    """Paired differences have zero variance, so the t statistic is undefined."""


class EmptyGridError(ValueError):
    """A hyperparameter grid search was given no cells."""


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


class MissingTraceError(FileNotFoundError):
    """No training traces were found where some were expected."""


class DivergenceError(RuntimeError):
    """Training blew up (epoch MSE above the divergence threshold)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
