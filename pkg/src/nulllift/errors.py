"""Exception types shared across the package."""


class NullliftError(Exception):
    """Base class for errors raised by this package."""


class DomainError(NullliftError, ValueError):
    """A field or function was evaluated outside its domain.

    Raised for log of a non-positive number, sqrt of a negative number,
    division by zero, derivative queries at kinks of abs/sign, and
    derivative queries that exceed the supported jet order.
    """


class ExpressionError(NullliftError, ValueError):
    """A problem with an expression string.

    Attributes
    ----------
    text : str
        The offending source text.
    position : int
        0-based character offset of the problem, -1 if not applicable.
    """

    def __init__(self, message, text="", position=-1):
        super().__init__(message)
        self.text = text
        self.position = position


class SingularMetricError(NullliftError, ValueError):
    """A metric was degenerate or too ill-conditioned to invert reliably."""


class LiftError(NullliftError, ValueError):
    """A lift constructor precondition failed."""


class MapError(NullliftError, ValueError):
    """A duality map could not be built, applied, or inverted."""


class EDFormError(MapError):
    """A pullback failed the null-lift structural constraints.

    Carries the worst offending sample point and component.
    """

    def __init__(self, message, point=None, component=None, residual=None):
        super().__init__(message)
        self.point = point
        self.component = component
        self.residual = residual


class ScenarioError(NullliftError, ValueError):
    """A scenario configuration is invalid."""
