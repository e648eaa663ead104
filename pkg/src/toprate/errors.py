"""Exception types shared across the package."""


class TopRateError(Exception):
    """Base class for package errors."""


class DegenerateDensity(TopRateError):
    """Operation undefined for a purely atomic spectral density."""


class OutOfSupport(TopRateError):
    """Evaluation point lies strictly below the upper spectral edge."""


class DomainExceeded(TopRateError):
    """Transform argument lies at or beyond the supremum of its domain."""


class NonConvergence(TopRateError):
    """An iterative solve or sampler failed to converge."""


class InvalidShapeRatio(TopRateError):
    """Rectangular operands have incompatible or out-of-range shape ratios."""


class InsufficientTail(TopRateError):
    """No Monte Carlo sample reached the requested tail region."""
