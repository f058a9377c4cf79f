"""Exception hierarchy shared across the library.

Validation errors map to CLI exit code 2, numerical failures to exit code 3.
"""


class XXZError(Exception):
    """Base class for all library errors."""

    code = "error"


class ValidationError(XXZError, ValueError):
    """Bad user input (wrong domain, conflicting parameters, ...)."""

    code = "validation"


class NumericalError(XXZError, RuntimeError):
    """A numerical procedure failed to meet its contract."""

    code = "numerical"


class PoleProximityError(NumericalError):
    code = "pole-proximity"


class ContourError(NumericalError):
    code = "contour-failure"


class SolverError(NumericalError):
    code = "solver-failure"


class BracketError(NumericalError):
    code = "bracket-failure"


class IntegrationError(NumericalError):
    code = "integration-failure"


class InvalidStringError(ValidationError):
    code = "invalid-string"


class DegenerateAnisotropyError(ValidationError):
    code = "degenerate-anisotropy"


class SignInconsistencyError(NumericalError):
    code = "sign-inconsistency"


class NearCriticalError(ValidationError):
    code = "near-critical"


class RegimeMismatchError(ValidationError):
    code = "regime-mismatch"


class ConsistencyError(NumericalError):
    code = "consistency-failure"


class ReductionMismatchError(NumericalError):
    code = "reduction-mismatch"
