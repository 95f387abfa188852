"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a structural invariant (shape, hermiticity, positivity...)."""


class NumericalFailure(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    The best bound found so far is kept on the exception so callers can still
    report something useful.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnsupportedFamily(ValueError):
    """The requested computation needs a membership test the family lacks."""


class UnsupportedInstance(ValueError):
    """The instance falls outside the regime where a bound is meaningful."""
