"""Double free boundary pricing of defaultable bonds with rating migration.

The package solves the parabolic obstacle problem for the bond value in a
moving log-price frame: a closed-form steady traveling profile, a penalized
explicit-implicit finite-difference solver with Newton inner iteration,
extraction and diagnostics for the default and transit free boundaries, and
an independent regime-switching Monte Carlo cross-check.
"""
from .config import DEFAULTS, ConfigError, RunConfig, load_run_config
from .diagnostics import (
    DEFAULT_BOUNDARY_TOL,
    INVARIANT_NAMES,
    BoundaryExtractionError,
    BoundaryTrace,
    DiagnosticsReport,
    InvariantResult,
    check_invariants,
    check_m_matrix,
    extract_default_boundary,
    extract_transit_boundary,
    sup_error_vs_tw,
)
from .mc import (
    ComparisonRecord,
    McConfig,
    McResult,
    PathSample,
    compare_mc_pde,
    disabled_boundary_trace,
    pde_reference_price,
    price_bond_mc,
    simulate_path,
)
from .model import (
    DerivedConstants,
    ModelParams,
    ParameterError,
    ValidatedParams,
    derived_constants,
    sigma_eff,
    smoothed_heaviside,
    u_to_v,
    v_to_u,
    validate_params,
)
from .solver import (
    Grid,
    NewtonIterationError,
    SolutionField,
    SolverConfig,
    SolverError,
    TridiagonalSystem,
    assemble_system,
    convection_coefficient,
    initial_condition,
    newton_penalty_solve,
    run_solver,
    thomas_solve,
)
from .wave import (
    TravelingWave,
    build_traveling_wave,
    psi,
    psi_inverse,
    tw_derivative,
    tw_residual,
    tw_second_derivative,
    tw_value,
)

__version__ = "0.1.0"
