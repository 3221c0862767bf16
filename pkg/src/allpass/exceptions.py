"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`AllPassError`.  The CLI maps :class:`DimensionError` and
:class:`PreconditionError` (mathematical failures) to exit status 1.
"""


class AllPassError(Exception):
    """Base class for library errors."""


class DimensionError(AllPassError, ValueError):
    """Matrix shapes are incompatible."""


class PreconditionError(AllPassError, ValueError):
    """A mathematical precondition of an operation does not hold."""


class NotMinimalError(PreconditionError):
    """The realization is not minimal (unreachable or unobservable modes)."""


class NotReachableError(PreconditionError):
    """The pair (A, B) is not reachable."""


class NotObservableError(PreconditionError):
    """The pair (A, C) is not observable."""


class NotAllPassError(PreconditionError):
    """The data do not describe an all-pass function."""


class NotInvariantError(PreconditionError):
    """A subspace is not invariant under the required matrix."""


class ClmiError(PreconditionError):
    """A matrix fails the constrained LMI (PSD with rank m)."""


class PoleError(PreconditionError):
    """Evaluation requested at (or numerically at) a pole."""
