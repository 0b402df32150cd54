"""Exception hierarchy for tikhonov_nmf.

Every error derives from :class:`TikhonovNMFError` and from the closest
builtin, so callers can catch either.
"""

from __future__ import annotations


class TikhonovNMFError(Exception):
    """Base class for all library errors."""


class ShapeMismatchError(TikhonovNMFError, ValueError):
    def __init__(self, operation: str, *shapes: tuple[int, ...]) -> None:
        self.operation = operation
        self.shapes = shapes
        rendered = " vs ".join("x".join(str(d) for d in s) for s in shapes)
        super().__init__(f"{operation}: dimension mismatch ({rendered})")


class NonFiniteError(TikhonovNMFError, ValueError):
    def __init__(
        self,
        message: str,
        *,
        iteration: int | None = None,
        field: str | None = None,
    ) -> None:
        self.iteration = iteration
        self.field = field
        super().__init__(message)


class NegativeEntryError(TikhonovNMFError, ValueError):
    pass


class InvalidParameterError(TikhonovNMFError, ValueError):
    pass


class SingularSystemError(TikhonovNMFError, ArithmeticError):
    pass


class DegenerateDenominatorError(TikhonovNMFError, ZeroDivisionError):
    pass


class InsufficientDataError(TikhonovNMFError, ValueError):
    pass


class MatrixFormatError(TikhonovNMFError, ValueError):
    def __init__(self, path: str, message: str, *, line: int | None = None) -> None:
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")
