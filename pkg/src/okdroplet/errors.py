"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` (CLI exit code 2),
numerical failures from :class:`NumericError` (CLI exit code 3).
"""


class OKDropletError(Exception):
    """Base class for all package errors."""


class ValidationError(OKDropletError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NonPositiveMass(ValidationError):
    pass


class NegativeMass(ValidationError):
    pass


class NegativeGamma(ValidationError):
    pass


class InvalidAnsatz(ValidationError):
    pass


class MassMismatch(ValidationError):
    pass


class InsufficientMass(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class OverlappingBalls(ValidationError):
    pass


class InvalidQuadrature(ValidationError):
    pass


class SchemaError(ValidationError):
    """Config parse failure; ``pointer`` is a JSON pointer to the bad field."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}", field=pointer)
        self.pointer = pointer


class NotMixed(ValidationError):
    pass


class PreconditionViolated(ValidationError):
    pass


class NumericError(OKDropletError, ArithmeticError):
    pass


class ConvergenceFailure(NumericError):
    pass
