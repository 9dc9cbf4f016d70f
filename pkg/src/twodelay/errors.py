"""Exception hierarchy shared across the package."""


class TwoDelayError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameters(TwoDelayError, ValueError):
    pass


class NonConvergence(TwoDelayError):
    pass


class ContourRootError(TwoDelayError):
    """A characteristic root sits on (or numerically touches) the counting contour."""


class CountMismatch(TwoDelayError):
    """Newton search found a different number of roots than the argument principle.

    The roots that were found are attached as ``partial`` so callers can still
    inspect them; they are unverified.
    """

    def __init__(self, message, partial=None, expected=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []
        self.expected = expected


class MarginalStability(TwoDelayError):
    """A root lies within tolerance of the imaginary axis."""


class SingularOmega(TwoDelayError):
    pass


class InfiniteTransition(TwoDelayError):
    pass


class EmptyCurve(TwoDelayError):
    pass


class NotCoprime(InvalidParameters):
    pass


class NonpositiveA(InvalidParameters):
    pass


class EmptyRegion(TwoDelayError):
    pass


class SeedUnstable(TwoDelayError):
    pass


class OpenLoop(TwoDelayError):
    pass


class NoBracket(TwoDelayError):
    pass


class NoCusp(TwoDelayError):
    pass


class StepTooLarge(InvalidParameters):
    pass


class Overflow(TwoDelayError):
    pass


class NoPositiveEquilibrium(TwoDelayError):
    pass


class NotOscillatory(TwoDelayError):
    pass
