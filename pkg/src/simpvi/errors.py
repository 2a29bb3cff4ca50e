"""Exception hierarchy shared by every module of the package."""


class SimpviError(Exception):
    """Base class for all package errors."""


class ContractError(SimpviError, ValueError):
    """An argument violates a documented precondition (shape, sign, range)."""


class DomainError(ContractError):
    """A scalar argument lies outside the admissible interval."""


class SingularMassError(SimpviError, ArithmeticError):
    """The mass matrix cannot be inverted at the requested configuration."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SingularityError(SimpviError, ArithmeticError):
    """A coordinate chart singularity was reached (e.g. sin(theta) = 0)."""


class SolverError(SimpviError, ArithmeticError):
    """The Newton linear system could not be solved."""


class StepFailure(SimpviError, RuntimeError):
    """An implicit step did not converge.

    ``residual_norm`` is the last infinity norm reached and ``trajectory``
    (set by the integrators) holds every step completed before the failure.
    """

    def __init__(self, message, residual_norm=float("nan"), trajectory=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.trajectory = trajectory


class ModelInconsistencyError(SimpviError, ValueError):
    """Constants or initial conditions do not describe a physical motion."""


class ModelEvaluationError(SimpviError, ArithmeticError):
    """A model callback failed or returned non-finite values at a named node."""
