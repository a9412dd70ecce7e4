"""Source reconstruction from a single internal functional in UMBLT."""

from ._backend import AVAILABLE as BACKENDS, default_backend
from .errors import (
    ConfigError,
    DivergenceError,
    DomainMismatchError,
    PositivityError,
    RankDeficiencyWarning,
    SingularKernelError,
    UMBLTError,
    UndefinedMetricError,
    WellPosednessWarning,
)
from .experiments import (
    ExperimentConfig,
    ExperimentSetup,
    RunReport,
    add_noise,
    load_config,
    preset_config,
    run_experiment,
    synthesize_measurement,
)
from .functional import (
    InternalFunctional,
    apply_A,
    forward_map_T,
    internal_functional,
    modulated_boundary_functional,
    op_K,
    op_M,
    op_M_inverse,
    op_S,
)
from .grid import (
    AngularField,
    DirectionSet,
    Grid2D,
    ScalarField,
    angular_integrate,
    interpolate,
    read_csv,
    relative_l2_error,
    write_csv,
)
from .inversion import BasisSet, ReconstructionResult, evaluate_basis, fredholm_invert, neumann_invert
from .medium import (
    OpticalMedium,
    WellPosednessReport,
    check_wellposedness,
    contraction_audit,
    hg_kernel,
    scattering_bound_rho,
)
from .phantoms import PhantomSpec, gaussian_smooth, render
from .transport import SolverSettings, TransportSolution, solve_adjoint, solve_forward, solve_modulated

BACKEND = default_backend()

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainMismatchError",
    "PositivityError",
    "RankDeficiencyWarning",
    "SingularKernelError",
    "UMBLTError",
    "UndefinedMetricError",
    "WellPosednessWarning",
    "ExperimentConfig",
    "ExperimentSetup",
    "RunReport",
    "add_noise",
    "load_config",
    "preset_config",
    "run_experiment",
    "synthesize_measurement",
    "InternalFunctional",
    "apply_A",
    "forward_map_T",
    "internal_functional",
    "modulated_boundary_functional",
    "op_K",
    "op_M",
    "op_M_inverse",
    "op_S",
    "AngularField",
    "DirectionSet",
    "Grid2D",
    "ScalarField",
    "angular_integrate",
    "interpolate",
    "read_csv",
    "relative_l2_error",
    "write_csv",
    "OpticalMedium",
    "WellPosednessReport",
    "check_wellposedness",
    "contraction_audit",
    "hg_kernel",
    "scattering_bound_rho",
    "BACKENDS",
    "default_backend",
    "BasisSet",
    "ReconstructionResult",
    "evaluate_basis",
    "fredholm_invert",
    "neumann_invert",
    "PhantomSpec",
    "gaussian_smooth",
    "render",
    "SolverSettings",
    "TransportSolution",
    "solve_adjoint",
    "solve_forward",
    "solve_modulated",
    "BACKEND",
]
