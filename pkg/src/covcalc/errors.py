"""Exception types shared across the package."""


class CovcalcError(Exception):
    pass


class DomainError(CovcalcError, ValueError):
    """Argument outside the domain of an operation."""


class UnsupportedError(CovcalcError):
    """Requested closed form or decomposition is not available."""


class KernelNotPSDError(CovcalcError):
    """Gram matrix could not be factorized even after jitter."""

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class EstimationError(CovcalcError):
    pass


class CheckFailure(CovcalcError):
    """A hard verification assertion failed."""
