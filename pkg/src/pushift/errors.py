"""Exception types shared across the package."""


class PUError(Exception):
    """Base class for all package errors."""


class DomainError(PUError, ValueError):
    """A prior, cost or shift lies outside its open interval."""


class DimensionError(PUError, ValueError):
    """Pattern or weight dimensionality does not match."""


class EmptySampleError(PUError, ValueError):
    pass


class UnsupportedLossError(PUError, ValueError):
    pass


class NumericalError(PUError, ArithmeticError):
    """Non-finite objective/gradient or a failed linear solve."""


class ParseError(PUError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
