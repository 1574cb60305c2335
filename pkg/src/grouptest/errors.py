"""Exception types shared across the package."""


class GroupTestError(Exception):
    """Base class for all grouptest errors."""


class ParameterOutOfRange(GroupTestError):
    """A family parameter is invalid for the requested defective count."""


class NonMonotone(GroupTestError):
    """A user-supplied test-function table is not non-decreasing."""


class Degenerate(GroupTestError):
    """The test function carries no information (f(0) = f(d) or equivalent)."""


class DegenerateSensitivity(GroupTestError):
    """The sensitivity gap underflowed to zero at the requested participation
    probability; the caller must choose another q."""


class DefectiveCountMismatch(GroupTestError):
    """The supplied defective set does not match the test function's d."""


class TesterFailure(GroupTestError):
    """The pool tester could not produce an outcome."""
