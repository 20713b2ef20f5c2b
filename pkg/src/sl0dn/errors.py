"""Exception hierarchy shared by every module of the toolkit."""


class SL0DNError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(SL0DNError, ValueError):
    """A parameter lies outside its legal domain."""


class ShapeError(SL0DNError, ValueError):
    """Array dimensions are inconsistent."""


class UndefinedMetricError(SL0DNError, ValueError):
    """A metric was requested where it is not defined (e.g. SNR of a zero signal)."""


class RankError(SL0DNError, ValueError):
    """The mixing matrix lacks the row rank a solver requires."""


class FitError(SL0DNError, ValueError):
    """A curve fit was requested on degenerate data."""


class DivergedError(SL0DNError, RuntimeError):
    """A solver produced non-finite or runaway iterates.

    Attributes
    ----------
    trace : list of StageTrace
        Stages completed before the divergence was detected, plus the
        partial stage in which it happened.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
