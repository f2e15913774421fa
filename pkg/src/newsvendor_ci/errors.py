"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(ArithmeticError):
    """An iterative routine exhausted its iteration budget."""


class DataError(ValueError):
    """Sample data is inconsistent or degenerate for the requested estimate."""
