"""Errors and warnings raised across asymptolab.

Every error subclasses a built-in exception so callers that only care about the
broad category (bad value vs. failed computation) can keep catching built-ins.
"""


class SpecValidationError(ValueError):
    """The problem data (or the experiment configuration) violate a hypothesis."""


class PolynomialEvaluationError(ValueError):
    """A polynomial that must not vanish on the frequency grid vanishes at a node."""


class InfeasibleCoveringError(ValueError):
    """No good covering exists for the requested number of sectors and opening."""


class GridMismatchError(ValueError):
    """Two grid functions live on different frequency grids."""


class InadmissibleDirectionError(ValueError):
    r"""A Laplace integration direction violates the cone condition.

    :param message: Error message.
    :type message: str
    :param suggestion: A direction that satisfies the cone condition, if one was found.
    :type suggestion: float, optional
    """

    def __init__(self, message, suggestion=None):
        super(InadmissibleDirectionError, self).__init__(message)
        self.suggestion = suggestion


class StripViolationError(ValueError):
    """The evaluation point lies outside the analyticity strip of an inverse Fourier transform."""


class NoGapError(ValueError):
    """Root arguments of the Borel denominator leave no angular gap."""


class BoundViolationError(ValueError):
    """A sampled lower or upper bound fails."""


class DivergenceError(RuntimeError):
    """The fixed-point iteration diverges."""


class DirectionUnavailableError(KeyError):
    """A grid function holds no values along the requested direction."""


class InfeasibleConeError(ValueError):
    r"""The cone conditions and the Borel sector have empty intersection.

    :param message: Error message.
    :type message: str
    :param intervals: The intervals whose intersection is empty.
    :type intervals: list
    """

    def __init__(self, message, intervals=None):
        super(InfeasibleConeError, self).__init__(message)
        self.intervals = intervals or []


class DomainViolationError(ValueError):
    """A constructed point falls outside the domain it must belong to."""


class OverlapEmptyError(ValueError):
    """A parameter that must lie in the overlap of two consecutive sectors does not."""


class DegenerateDataError(ValueError):
    """Data carries no signal for the requested fit."""


class EnvelopeViolationError(ValueError):
    r"""A sampled quantity exceeds its fitted envelope.

    :param message: Error message.
    :type message: str
    :param offending: The offending sample points.
    :type offending: list
    """

    def __init__(self, message, offending=None):
        super(EnvelopeViolationError, self).__init__(message)
        self.offending = offending or []


class ConditioningError(ValueError):
    """A linear system is too ill-conditioned to be trusted."""


class ConfigError(ValueError):
    """A configuration file cannot be parsed into an experiment configuration."""


class TruncationWarning(RuntimeWarning):
    """A truncated integral or series leaves a tail above the requested tolerance."""


class NonConvergenceWarning(RuntimeWarning):
    """A series or iteration reached its cap before meeting its tolerance."""
