"""Exception hierarchy shared by every module."""


class ErpQuantError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ErpQuantError, ValueError):
    pass


class DimensionError(ErpQuantError, ValueError):
    pass


class TrainingError(ErpQuantError, ValueError):
    pass


class NumericError(ErpQuantError, ArithmeticError):
    pass


class EvaluationError(ErpQuantError, ValueError):
    pass


class ReportError(ErpQuantError, ValueError):
    pass


class FormatError(ErpQuantError):
    """Malformed binary file. ``offset`` is the byte position where parsing failed."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class TruncationError(FormatError):
    pass


class OutOfBoundsError(ErpQuantError, IndexError):
    pass
