"""Exception hierarchy shared by all adequate modules."""


class AdequateError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(AdequateError, ValueError):
    """A distribution or configuration parameter is outside its domain."""


class DomainError(AdequateError, ValueError):
    """A function argument is outside the domain of the operation."""


class ConfigurationError(AdequateError):
    """A required table, registration or configuration entry is missing."""


class SolverError(AdequateError):
    """An iterative solver failed to converge within its iteration budget."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DataError(AdequateError, ValueError):
    """An input dataset is malformed or violates a precondition."""
