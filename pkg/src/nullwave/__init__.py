"""nullwave: a weighted-energy laboratory for half-line wave systems.

The package simulates the initial-boundary value problem for 1-D
quasilinear wave systems on the half line x >= 0 with a Dirichlet wall at
x = 0, classifies their nonlinearities by a sampled null-structure checker,
and turns weighted-energy estimates into numerical verdicts: multiplier
identity residuals, boundary-flux cancellation, pointwise bounds with
explicit constants, bootstrap eps^2 scaling, and blow-up time scaling for
systems that fail the structural conditions.
"""

from .domain import (
    FAMILIES,
    CompatibilityReport,
    GridConfig,
    InitialData,
    make_initial_data,
    sample_family,
    verify_compatibility,
    weighted_data_norm,
)
from .energetics import (
    CSV_COLUMNS,
    DerivativeStack,
    EnergyObserver,
    EnergySnapshot,
    SpaceTimeAccumulator,
    TimeWindow,
    accumulate,
    build_stack,
    energy_snapshot,
)
from .errors import (
    CatalogLookupError,
    CompatibilityError,
    ConfigError,
    CounterexampleError,
    DegeneracyError,
    DomainError,
    EvaluationError,
    NullwaveError,
    ResolutionError,
    SequencingError,
    StagingError,
)
from .experiments import (
    FluxReport,
    IdentityReport,
    IdentityTerms,
    PointwiseReport,
    SweepResult,
    TrajectoryRecorder,
    blowup_sweep,
    bootstrap_sweep,
    boundary_flux_check,
    fit_loglog,
    multiplier_identity_residual,
    pointwise_bound_check,
    worker_count,
)
from .models import (
    DEGENERACY_MARGIN,
    ConditionReport,
    NullVerdict,
    SystemSpec,
    catalog_get,
    catalog_names,
    check_null_conditions,
    quasilinear_matrices,
    smallest_singular_value,
)
from .solver import (
    AMPLITUDE_THRESHOLD,
    FAR_CLAMP,
    BlowupInfo,
    FieldState,
    HalfLineSolver,
    RunSummary,
    compute_rhs,
    run,
    step,
    to_null_derivatives,
)
from .weights import (
    PsiTable,
    WeightParams,
    eval_bracket,
    eval_phi_theta,
    eval_psi,
    get_psi_table,
)
from .cli import RunConfig, dispatch, main, parse_config

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # weights
    "WeightParams", "PsiTable", "eval_bracket", "eval_phi_theta", "eval_psi",
    "get_psi_table",
    # models
    "SystemSpec", "ConditionReport", "NullVerdict", "catalog_get",
    "catalog_names", "check_null_conditions", "quasilinear_matrices",
    "smallest_singular_value", "DEGENERACY_MARGIN",
    # domain
    "GridConfig", "InitialData", "CompatibilityReport", "FAMILIES",
    "make_initial_data", "sample_family", "verify_compatibility",
    "weighted_data_norm",
    # solver
    "FieldState", "BlowupInfo", "RunSummary", "HalfLineSolver", "run",
    "step", "compute_rhs", "to_null_derivatives", "AMPLITUDE_THRESHOLD",
    "FAR_CLAMP",
    # energetics
    "TimeWindow", "DerivativeStack", "EnergySnapshot",
    "SpaceTimeAccumulator", "EnergyObserver", "build_stack",
    "energy_snapshot", "accumulate", "CSV_COLUMNS",
    # experiments
    "IdentityTerms", "IdentityReport", "FluxReport", "PointwiseReport",
    "SweepResult", "TrajectoryRecorder", "multiplier_identity_residual",
    "boundary_flux_check", "pointwise_bound_check", "bootstrap_sweep",
    "blowup_sweep", "fit_loglog", "worker_count",
    # cli
    "RunConfig", "parse_config", "dispatch", "main",
    # errors
    "NullwaveError", "ConfigError", "CatalogLookupError", "DomainError",
    "CompatibilityError", "DegeneracyError", "EvaluationError",
    "ResolutionError", "StagingError", "SequencingError",
    "CounterexampleError",
]
