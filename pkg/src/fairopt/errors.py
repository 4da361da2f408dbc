"""Exception hierarchy.

Validation problems subclass :class:`ValidationError` (CLI exit code 2);
numerical/runtime failures subclass :class:`NumericError` (exit code 3).
"""


class FairoptError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(FairoptError, ValueError):
    """Invalid configuration or input."""


class InvalidParameterError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class UnsupportedAlgorithmError(ValidationError):
    pass


class ParseError(ValidationError):
    """Malformed input file; message carries file/row/column context."""


class NumericError(FairoptError, ArithmeticError):
    """Computation produced or received non-finite values."""


class NonFiniteInputError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UndefinedThresholdError(NumericError):
    """Theorem-1 threshold requested where it is 0/0 (balanced groups)."""


class UndefinedSignError(NumericError):
    """Sign of L0 - L1 requested where the two subgroup losses tie."""
