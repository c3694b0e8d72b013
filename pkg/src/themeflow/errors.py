"""Exception types shared across the package."""


class ThemeflowError(Exception):
    """Base class for all domain errors raised by this package."""


class OutOfWindow(ThemeflowError):
    """A curve was evaluated outside the time window it is defined on."""


class NoInflection(ThemeflowError):
    """The rise curve starts at or above saturation and has no inflection."""


class StepTooLarge(ThemeflowError):
    """An integration step produced a negative or non-finite value."""


class TooFewSamples(ThemeflowError):
    """A series does not contain enough samples for the requested operation."""


class DegenerateSeries(ThemeflowError):
    """A series carries no thematic signal, so a fit is underdetermined."""


class NotConverged(ThemeflowError):
    """An operation requires a converged fit but received a failed one."""


class ParseError(ThemeflowError):
    """A data file could not be parsed; message carries row/column context."""


class NonMonotoneTime(ThemeflowError):
    """Sample times in a data file decrease at some row."""
