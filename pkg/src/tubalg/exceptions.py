"""Exception types raised by :mod:`tubalg`."""


class TubalgError(Exception):
    """Base class for all library errors."""


class ShapeError(TubalgError, ValueError):
    """Tensor or matrix dimensions are incompatible."""


class DomainError(TubalgError, ValueError):
    """Operands live in different domains (spatial vs. transform)."""


class NotInvertible(TubalgError, ValueError):
    """The transform matrix is singular or too badly conditioned."""


class NotRealRing(TubalgError, ValueError):
    """Some row of the transform is neither real nor conjugate-paired."""


class InvalidMultirank(TubalgError, ValueError):
    """A multirank is not constant on the conjugate groups of the transform."""


class RankSpecError(TubalgError, ValueError):
    """A rank specification is out of range for the tensor."""


class DegenerateData(TubalgError, ValueError):
    """Input data carries no information (e.g. all-zero snapshots)."""


class RealnessError(TubalgError, ArithmeticError):
    """A result that must be real came back with a large imaginary part."""


class NotApplicable(TubalgError, ValueError):
    """A counterexample construction does not apply to this transform."""


class FileFormatError(TubalgError, ValueError):
    """An input file could not be parsed."""


class TbtFormatError(FileFormatError):
    """Malformed TBT1 file."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
