"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` and numerical
failures from :class:`NumericalError`; the CLI maps the two families to
different exit codes.
"""


class EscapeRateError(Exception):
    """Base class for all package errors."""


class ValidationError(EscapeRateError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(EscapeRateError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class NotPrimitive(ValidationError):
    pass


class EmptyRowOrColumn(ValidationError):
    pass


class LengthOverflow(ValidationError):
    pass


class NotCyclicallyAdmissible(ValidationError):
    pass


class InvalidPeriodicPoint(ValidationError):
    pass


class Inadmissible(ValidationError):
    pass


class Infeasible(ValidationError):
    pass


class NonPositiveLower(ValidationError):
    pass


class DepthMismatch(ValidationError):
    pass


class PrefixExhausted(ValidationError):
    """A finite point description ran out of symbols."""


class NoConvergence(NumericalError):
    pass


class FullEscape(NumericalError):
    """The hole-restricted operator is nilpotent: every orbit escapes."""
