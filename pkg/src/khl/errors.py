"""Exception types raised by khl.

Every error is a ``ValueError`` so callers that only care about bad input can
catch that; the CLI catches :class:`KhlError` and exits with status 2.
"""


class KhlError(ValueError):
    pass


class InvalidCoefficients(KhlError):
    pass


class DimensionTooLarge(KhlError):
    pass


class InvalidMomentQuery(KhlError):
    pass


class DomainError(KhlError):
    pass


class QuadratureNotConverged(KhlError, ArithmeticError):
    pass


class IndexOutOfRange(KhlError, IndexError):
    pass


class LambdaOutOfRange(KhlError):
    pass


class CapInfeasible(KhlError):
    pass


class NotComparable(KhlError):
    pass


class HypothesisViolated(KhlError):
    pass


class StepLimitExceeded(KhlError, RuntimeError):
    pass


class InvalidSetting(KhlError):
    pass
