"""Exception and warning types raised by fdrbounds."""


class FdrBoundsError(Exception):
    """Base class for all library errors."""


class ParameterError(FdrBoundsError, ValueError):
    """An argument is outside its admissible set."""


class DomainError(ParameterError):
    """A value lies outside the domain of a transform or p-value map."""


class RangeError(ParameterError):
    """A rank or count is out of range for the data it indexes."""


class PreconditionError(ParameterError):
    """A closed-form bound was evaluated outside its stated hypotheses."""


class RegimeWarning(UserWarning):
    """An asymptotic formula was evaluated outside the regime it is accurate in."""
