"""Exception types shared across the solver and problem library."""


class AA1SError(Exception):
    """Base class for all library-specific errors."""


class SingularMatrixError(AA1SError):
    """A pivot fell below the singularity threshold during factorization."""


class ZeroRowError(AA1SError):
    """Equilibration encountered an all-zero row."""


class ZeroColumnError(AA1SError):
    """Equilibration encountered an all-zero column after row scaling."""


class ZeroUpdateError(AA1SError):
    """A secant update vector was exactly zero.

    This can only happen when the current iterate is already a fixed
    point, in which case the solve loop should have terminated.
    """


class DegenerateDenominatorError(AA1SError):
    """The rank-one update denominator vanished despite regularization."""


class NonFiniteIterateError(AA1SError):
    """An iterate left the representable range (NaN or infinity)."""
