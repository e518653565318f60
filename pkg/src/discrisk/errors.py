"""Exception types shared across the package."""


class DiscriskError(Exception):
    """Base class for errors raised by discrisk."""


class DomainError(DiscriskError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConvergenceError(DiscriskError, RuntimeError):
    """An iterative fit or search failed to converge."""


class NumericalError(DiscriskError, ArithmeticError):
    """A result overflowed or lost all significance."""
