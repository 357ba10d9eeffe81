"""Exception hierarchy shared by the whole package."""


class ClinchingError(Exception):
    """Base class for every error raised by this package."""


class MalformedFunctionError(ClinchingError, ValueError):
    """A set function description is incomplete or ill-typed."""


class UnsupportedSizeError(ClinchingError, ValueError):
    """An exhaustive routine was asked to enumerate too many subsets."""


class PreconditionError(ClinchingError, ValueError):
    """An operation was called on a state that violates its precondition."""


class GridMisalignmentError(ClinchingError, ValueError):
    """Quantities handed to a grid oracle are not multiples of its step."""


class InvariantViolation(ClinchingError):
    """A runtime invariant failed at an auction checkpoint.

    ``checkpoint`` carries the offending record so callers can inspect the
    exact state.
    """

    def __init__(self, message, checkpoint=None, report=None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.report = report


class ScenarioError(ClinchingError, ValueError):
    """A scenario document could not be parsed or failed validation."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])
