"""Exception types shared across the toolkit."""


class HolonomyError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(HolonomyError, ValueError):
    """An argument violates a documented precondition."""


class ConstraintViolation(HolonomyError, ValueError):
    """A path or schedule breaks the cyclic/holonomic constraints."""


class StructureViolation(HolonomyError):
    """A numerically derived Hamiltonian leaves the Lambda coupling pattern."""

    def __init__(self, message, residual=None, index=None):
        super().__init__(message)
        self.residual = residual
        self.index = index


class NumericalError(HolonomyError, ArithmeticError):
    """An iterative routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
