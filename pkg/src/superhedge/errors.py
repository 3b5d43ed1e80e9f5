"""Exception hierarchy."""


class SuperhedgeError(Exception):
    """Base class for all errors raised by the package."""


class ValidationError(SuperhedgeError, ValueError):
    """Input data violates a structural requirement."""


class MalformedTree(ValidationError):
    pass


class TimeOutOfRange(ValidationError):
    pass


class CrossedBook(ValidationError):
    pass


class NonMonotoneLadder(ValidationError):
    pass


class NegativeDeflator(ValidationError):
    pass


class PolarOfNonCone(ValidationError):
    pass


class NonpositivePrice(ValidationError):
    pass


class NoNumeraire(ValidationError):
    pass


class ZeroPremium(ValidationError):
    pass


class UndefinedBase(ValidationError):
    pass


class ConicalOnly(ValidationError):
    pass


class SolverError(SuperhedgeError):
    """The LP layer could not produce a trustworthy answer."""


class NumericalFailure(SolverError):
    pass


class VerificationError(SuperhedgeError):
    """A certificate failed its independent re-check."""


class GapTooLarge(VerificationError):
    pass


class SlopeNotStabilized(VerificationError):
    def __init__(self, message, slopes=None):
        super().__init__(message)
        self.slopes = slopes
