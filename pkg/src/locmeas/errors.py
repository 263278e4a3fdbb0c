"""Exception hierarchy shared across the package."""


class LocMeasError(ValueError):
    """Base class for all errors raised by :mod:`locmeas`."""


class NotPSD(LocMeasError):
    pass


class NotSubIdentity(LocMeasError):
    pass


class NotTraceless(LocMeasError):
    pass


class BadPermutation(LocMeasError):
    pass


class NotOrthogonal(LocMeasError):
    pass


class NotNormalized(LocMeasError):
    pass


class DomainError(LocMeasError):
    pass


class Infeasible(LocMeasError):
    pass


class DegenerateOutcome(LocMeasError):
    pass


class ExcludedCase(LocMeasError):
    pass


class InvalidPovm(LocMeasError):
    """Raised when a POVM fails validation; carries the violation report."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class CompilationError(LocMeasError):
    """Internal consistency check failed while building a measurement plan."""
