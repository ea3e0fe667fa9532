"""Exception types shared across the toolkit."""


class DimensionMismatchError(ValueError):
    """Two fields or paths do not live on compatible grids."""


class BlockRangeError(IndexError):
    """A dyadic block index exceeds what the grid can resolve."""


class InsufficientDataError(RuntimeError):
    """Not enough samples or blocks to produce a meaningful estimate."""


class InsufficientResolutionError(RuntimeError):
    """The time grid is too coarse for the requested operation."""


class ConfigError(ValueError):
    """An experiment or solver configuration is invalid."""


class DivergenceError(RuntimeError):
    """A fixed-point iteration failed to converge.

    Carries the iteration report so callers can inspect increments.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonContractionError(DivergenceError):
    """Picard increments stopped contracting; try a smaller time window."""
