"""Exception hierarchy shared across the package."""


class LowlightError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(LowlightError, ValueError):
    """Input data does not satisfy an operation's preconditions."""


class DegenerateInputError(InvalidInputError):
    """Input is well-formed but degenerate for the requested formula."""


class InvalidParamsError(LowlightError, ValueError):
    """Parameters are out of their documented range."""


class FileFormatError(LowlightError, ValueError):
    """A file could not be parsed."""


class PnmError(FileFormatError):
    """Base class for PNM parse errors."""


class BadMagicError(PnmError):
    pass


class UnsupportedDepthError(PnmError):
    pass


class TruncatedPayloadError(PnmError):
    pass


class CalibrationError(LowlightError):
    """Base class for geometric estimation failures."""


class ProjectionError(CalibrationError, ValueError):
    pass


class DegenerateGeometryError(CalibrationError, ValueError):
    pass


class InsufficientDataError(CalibrationError, ValueError):
    pass


class EmptyTargetError(CalibrationError, ValueError):
    pass


class BlobCountError(CalibrationError, ValueError):
    def __init__(self, found, expected):
        super().__init__(f"found {found} blobs, expected {expected}")
        self.found = found
        self.expected = expected


class NumericError(CalibrationError, ArithmeticError):
    pass


class InvalidDatasetError(LowlightError, ValueError):
    pass
