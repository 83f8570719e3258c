"""Exception types raised across the package."""


class MemsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MemsError, ValueError):
    """Non-finite entries, mismatched dimensions or out-of-range arguments."""


class ContractViolationError(MemsError, ValueError):
    """An input violates a structural precondition (orthonormality, Hermitian symmetry, ...)."""


class DomainError(MemsError, ValueError):
    """The input lies outside the mathematical domain of the operation."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class NumericalDegeneracyError(MemsError, ArithmeticError):
    """A numerical postcondition failed, e.g. subspace dimensions that do not add up."""

    def __init__(self, message, dims=None):
        super().__init__(message)
        self.dims = dims


class EmptyUsefulSpaceError(MemsError, ValueError):
    """The useful subspace is trivial so no quasi-optimal precoder exists."""


class ConfigError(MemsError, ValueError):
    """Invalid experiment configuration."""
