"""Fourth-order Simpson variational integrator for mechanical systems with
configuration-dependent mass matrices, with midpoint/RK4 baselines, the
exact Lagrange-top nutation and convergence tooling."""
from . import kernels
from .analysis import (
    ConvergenceReport,
    ErrorSeries,
    convergence_order,
    cross_method_difference,
    energy_error_series,
    momentum_error_series,
    nutation_error_series,
    sup_norm,
)
from .baselines import (
    FirstOrderField,
    hamiltonian_field,
    midpoint_integrate,
    midpoint_step,
    reduced_top_field,
    rk4_integrate,
    rk4_step,
    rk4_trajectory,
)
from .elliptic import (
    NutationCubic,
    TopMotionConstants,
    carlson_rf,
    ellipk,
    exact_nutation,
    jacobi_sn,
    nutation_cubic,
    nutation_period,
)
from .errors import (
    ContractError,
    DomainError,
    ModelEvaluationError,
    ModelInconsistencyError,
    SimpviError,
    SingularityError,
    SingularMassError,
    SolverError,
    StepFailure,
)
from .model import LagrangianModel, PhasePoint, ValidationReport, energy, validate_model
from .newton import NewtonConfig, NewtonOutcome, solve
from .simpson import (
    GearVelocities,
    StepStats,
    StepUnknowns,
    Trajectory,
    basis_p2,
    discrete_lagrangian,
    gear_velocities,
    integrate,
    jacobian_analytic,
    residual,
    step,
)
from .systems import (
    PRESETS,
    DoublePendulumParams,
    LagrangeTopParams,
    double_pendulum,
    get_preset,
    lagrange_top,
    top_conserved_momenta,
)

__version__ = "0.1.0"
