"""Exception types shared across the package."""


class HelichainError(Exception):
    pass


class DomainError(HelichainError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class PreconditionError(HelichainError, ValueError):
    """Inputs are well-formed but violate an operation's precondition."""


class NumericalFailure(HelichainError, ArithmeticError):
    """Non-finite energy or gradient encountered during an iteration."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration
