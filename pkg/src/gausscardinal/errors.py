"""Exception hierarchy shared by the library and the command line."""


class CardinalError(Exception):
    """Base class for all library errors."""


class DomainError(CardinalError, ValueError):
    """An input lies outside the domain of an operation."""


class ExtrapolationError(DomainError):
    """Evaluation requested outside the trusted region of a table or field."""


class ParameterError(CardinalError, ValueError):
    """A configuration parameter is out of range."""


class HypothesisError(CardinalError):
    """The smoothness hypothesis k > n/p (k >= n when p = 1) is violated."""


class AccuracyError(CardinalError):
    """A requested accuracy cannot be delivered with the given discretization."""


class ConditioningError(AccuracyError):
    """Floating point conditioning makes a route unusable for these parameters."""


class AccuracyWarning(UserWarning):
    """A result is returned but its estimated error exceeds the target."""
