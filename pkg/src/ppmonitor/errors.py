"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class FeasibilityError(ValueError):
    """Requested marginals/correlation cannot form a valid joint distribution."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class ConfigError(ValueError):
    """Invalid run configuration."""


class AccuracyError(ArithmeticError):
    """Numerical routine failed to reach the requested accuracy.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether to use them anyway.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NumericalIntegrityError(ArithmeticError):
    """A computed quantity violates a structural property (e.g. a CDF decreases)."""
