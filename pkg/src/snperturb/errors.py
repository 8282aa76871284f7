"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the region where a formula is defined."""


class ConvergenceError(ArithmeticError):
    """An iterative kernel hit its iteration cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
