"""Shadow-limit rate verification for 1d parabolic problems whose
diffusion blows up on an interior subinterval.

The package discretizes u_t - (p u_x)_x + (lambda + c) u = f(u) on (0,1)
with Neumann conditions, builds the constrained limit operator that
replaces the large-diffusion core by a single averaged degree of freedom,
and measures how fast solutions, spectra, equilibria, semigroups,
invariant graphs, and attractors of the perturbed problem approach their
limit counterparts as the profile stiffens.
"""

from .errors import (
    AdmissibilityError,
    AlignmentError,
    AmbiguityError,
    AssemblyError,
    BoxEscapeError,
    ConfigError,
    ContractViolation,
    CutSelectionError,
    DenseCostGuardError,
    DynamicsAnomalyError,
    FitRejectedError,
    HyperbolicityError,
    LocdiffError,
    NoContractionError,
    NonconvergenceError,
    RefineRequestError,
    SingularOperatorError,
    StiffnessError,
    StructuralChangeError,
    UniquenessViolationError,
)
from .model import (
    Coefficient,
    DiffusionProfile,
    Nonlinearity,
    ProblemConfig,
    Violation,
    check_admissible,
    default_config,
    load_config,
    make_profile,
    p_dist,
    require_admissible,
    tau,
    tau_log,
)
from .fem import (
    DiscreteOperator,
    GridFunction,
    Mesh,
    assemble,
    build_mesh,
    build_pair,
    constraint_basis,
    energy_inner,
    energy_norm,
    extend_E,
    interpolate,
    l2_norm,
    matrix_coo_text,
    nonlinear_load,
    weighted_mass,
)
from .elliptic import (
    EllipticSolution,
    shifted_diff_norm,
    solution_diff,
    solution_op_diff_norm,
    solve,
    standard_loads,
)
from .spectral import (
    Eigenpair,
    SpectralProjection,
    basis_angles,
    eigenpairs,
    eigenvalue_diff,
    gap_profile,
    spectral_projection,
)
from .equilibria import (
    Equilibrium,
    continue_to_eps,
    find_all_limit,
    hyperbolicity,
    matching_radius,
    newton,
)
from .semigroup import (
    FlowConfig,
    expm_oracle,
    integrate,
    step_to,
    time_one_diff,
    trajectory_csv,
)
from .manifold import (
    GraphFunction,
    GraphResult,
    LPConfig,
    SpectralSplit,
    cloud_graph_distance,
    compute_graph,
    graph_diff,
    invariance_residual,
    split,
    suggest_box,
)
from .attractor import (
    AttractorSample,
    check_same_structure,
    directed_distance,
    hausdorff,
    sample_attractor,
)
from .ratefit import CSV_HEADER, RateFit, RateReport, RateRow, fit_rate
from .cli import run

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
