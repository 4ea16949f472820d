"""Exception types raised across the package."""


class GIError(Exception):
    """Base class for all package errors."""


class ShapeError(GIError, ValueError):
    """Array or matrix dimensions are inconsistent."""


class InvalidValue(GIError, ValueError):
    """A numeric value is non-finite or otherwise unusable."""


class DuplicateEntry(GIError, ValueError):
    """The same (row, col) position was given conflicting values."""


class MalformedDict(GIError, ValueError):
    """An adjacency dictionary violates its schema."""


class GraphFormatError(GIError, ValueError):
    """A graph file could not be parsed."""


class DivergenceError(GIError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"loss became non-finite ({loss}) at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class IntegrityError(GIError, ValueError):
    """A checkpoint failed its integrity check or cannot be decoded."""


class SelfLoopWarning(UserWarning):
    """The input adjacency matrix carries a nonzero diagonal entry."""
