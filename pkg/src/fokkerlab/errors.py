"""Exception hierarchy.

Everything raised on purpose derives from :class:`FokkerLabError`. The two
intermediate classes decide the CLI exit code: :class:`ValidationError`
maps to 2 and :class:`NumericalError` to 3.
"""


class FokkerLabError(Exception):
    pass


class ValidationError(FokkerLabError, ValueError):
    """Bad input detected before any solve."""


class NumericalError(FokkerLabError, ArithmeticError):
    """A solver or fit could not deliver its contract."""


class InvalidModel(ValidationError):
    pass


class DegenerateModel(InvalidModel):
    pass


class SignConditionViolated(InvalidModel):
    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class NoAdmissibleN0(InvalidModel):
    pass


class OrderTooHigh(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class InvalidInitial(ValidationError):
    pass


class NTooSmall(ValidationError):
    pass


class RefinementTooSmall(ValidationError):
    pass


class ZeroMass(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class MisalignedGrid(ValidationError):
    pass


class StencilOutOfRange(ValidationError):
    pass


class Reducible(ValidationError):
    pass


class DegenerateFit(ValidationError):
    pass


class NonPositiveError(ValidationError):
    pass


class ToleranceNotMet(NumericalError):
    pass


class RichardsonFailed(NumericalError):
    pass


class QuadratureFailed(NumericalError):
    pass
