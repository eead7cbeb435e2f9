"""Random walks among random cycle weights.

Builds walk environments from translation-invariant families of weighted
closed lattice cycles, periodizes them on a torus, and checks the full
chain of facts behind the walk's diffusive behaviour: invariant mass,
time reversal, isoperimetry and Nash-type decay, corrector construction,
and the central limit theorem itself.
"""

from .cycles import (
    BUILTIN_MODELS,
    Cycle,
    CycleModel,
    WeightLaw,
    random_conductance,
    square_triangle,
    triangle_triangle,
    uniformly_elliptic,
)
from .environment import (
    Environment,
    StepDistribution,
    ValidationReport,
    build_environment,
    mass_at,
    reversal_identity_residual,
    square_triangle_mass_residual,
    step_distribution,
    step_distribution_reversed,
    validate_assumptions,
)
from .errors import (
    ConfigurationError,
    ContractError,
    DataError,
    ModelError,
    NumericalError,
    ParameterError,
    RwreError,
)

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    DecaySeries,
    DenseKernel,
    DilationCertificate,
    GaussianFit,
    NashCertificate,
    TorusKernel,
    adjoint_kernel,
    assemble_kernel,
    assumption_dilation_check,
    constructive_dilation_params,
    decay_tables,
    default_set_family,
    dilation_scan,
    dirichlet_form,
    gaussian_bound_fit,
    isoperimetric_check,
    kernel_power,
    nash_estimate,
    nash_recursion_check,
    ondiag_decay,
    symmetrized_power,
)
from .config import ExperimentConfig, load_config, parse_config  # noqa: E402
from .corrector import (  # noqa: E402
    CorrectorField,
    DriftField,
    EnvChain,
    adjoint_identity_check,
    build_env_chain,
    edge_dirichlet_form,
    h_minus_one_bound,
    h_minus_one_check,
    lambda_sweep,
    local_drift,
    poisson_solve,
    resolvent_solve,
    sector_bound,
    sector_condition_check,
)
from .montecarlo import (  # noqa: E402
    CheckpointStats,
    CltResult,
    WalkPath,
    empirical_gaussian_check,
    martingale_residual,
    occupation_relative_entropy,
    path_functional,
    quenched_clt_experiment,
    simulate_walk,
    walk_ensemble_positions,
)
