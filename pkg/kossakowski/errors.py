# Exceptions raised by the kossakowski package.
from typing import Optional, Tuple


class KossakowskiError(ValueError):
    """
    Base class for every error raised by the library. Subclasses ``ValueError`` since all of them
    describe an input that does not satisfy a constraint.
    """


class DimensionMismatchError(KossakowskiError):
    pass


class ConstraintViolationError(KossakowskiError):
    """
    A matrix, basis or frame failed one of its defining constraints.

    :param constraint: Short name of the failed constraint, e.g. ``"row sums"`` or ``"osid-a"``.
    :param residual: Largest absolute deviation found.
    :param location: Index (or index pair) where the largest deviation occurs.
    :param tol: Tolerance that was exceeded.
    """

    def __init__(
        self,
        constraint: str,
        residual: float,
        location: Optional[Tuple[int, ...]] = None,
        tol: Optional[float] = None,
    ):
        self.constraint = constraint
        self.residual = float(residual)
        self.location = location
        self.tol = tol
        msg = f"{constraint} violated: residual {self.residual:.3e}"
        if location is not None:
            msg += f" at {tuple(int(i) for i in location)}"
        if tol is not None:
            msg += f" (tolerance {tol:.0e})"
        super().__init__(msg)


class NotOnTorusError(KossakowskiError):
    """
    A circulant parameter vector has a DFT eigenvalue off the unit circle (or λ₀ ≠ n-1).

    :param index: Index k of the offending eigenvalue.
    :param modulus: Its modulus.
    """

    def __init__(self, index: int, modulus: float, expected: float = 1.0):
        self.index = int(index)
        self.modulus = float(modulus)
        self.expected = float(expected)
        super().__init__(
            f"not on the phase torus: |lambda_{self.index}| = {self.modulus:.12g}, expected {self.expected:g}"
        )


class NotCirculantError(KossakowskiError):
    pass


class NotPositiveError(KossakowskiError):
    pass


class MapFormatError(KossakowskiError):
    """
    Malformed Map / Orthogonal JSON input.

    :param line: 1-based line of the parse error if known.
    :param column: 1-based column of the parse error if known.
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ConsistencyError(KossakowskiError):
    """
    Two independent criteria disagree beyond tolerance. Treated as a bug signal, never resolved by picking a side.
    """
