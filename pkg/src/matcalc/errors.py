"""Exception hierarchy shared by every matcalc module."""

from __future__ import annotations


class MatcalcError(Exception):
    """Base class for all errors raised by matcalc."""


class ShapeMismatch(MatcalcError):
    pass


class ArityError(MatcalcError):
    pass


class ConflictingShape(MatcalcError):
    pass


class ExprSyntaxError(MatcalcError):
    """Raised by the parser; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownFunction(MatcalcError):
    pass


class UnboundVariable(MatcalcError):
    pass


class DomainError(MatcalcError):
    pass


class DivisionByZero(DomainError):
    pass


class DimensionMismatch(MatcalcError):
    pass


class CyclicDefinition(MatcalcError):
    pass


class Diverged(MatcalcError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"loss became non-finite ({loss}) at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss
