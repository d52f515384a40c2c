"""Exception hierarchy shared by every module of the package."""


class PhaseQuantError(Exception):
    """Base class for all errors raised by phasequant."""


class ParameterError(PhaseQuantError, ValueError):
    pass


class CoverageError(PhaseQuantError, ValueError):
    """A grid does not cover the Gaussian factors of the model."""


class GridMismatchError(PhaseQuantError, ValueError):
    """Two grids that must coincide do not (no implicit resampling)."""


class OutOfDomainError(PhaseQuantError, ValueError):
    pass


class SamplingError(PhaseQuantError, ValueError):
    pass


class DivergenceError(PhaseQuantError, ValueError):
    """Symbol or potential grows too fast for the Gaussian weights."""


class UnsupportedSymbolError(PhaseQuantError, TypeError):
    pass


class StabilityError(PhaseQuantError, ValueError):
    pass


class TruncationError(PhaseQuantError, RuntimeError):
    """Hermite expansion does not represent the data to tolerance."""


class InsufficientSignalError(PhaseQuantError, ValueError):
    pass


class ResolutionError(PhaseQuantError, ValueError):
    def __init__(self, message, suggested_n=None):
        super().__init__(message)
        self.suggested_n = suggested_n


class RegimeWarning(UserWarning):
    """Smoothing width is not well separated from the atomic scale."""
