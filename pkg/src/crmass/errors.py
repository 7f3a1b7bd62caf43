class CRMassError(Exception):
    """Base class for errors raised by crmass."""


class InvalidInputError(CRMassError, ValueError):
    """An argument violates a documented precondition."""


class UnderResolutionError(CRMassError, ArithmeticError):
    """The quadrature grid or basis truncation is too coarse for the request."""


class StagnationError(CRMassError, RuntimeError):
    """A fixed-point iteration stopped making progress."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
