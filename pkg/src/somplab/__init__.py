"""somplab: simultaneous greedy recovery of row-sparse signals, exact
restricted-isometry constants at desk scale, executable recovery
guarantees, and a Monte Carlo harness that checks the guarantees against
what actually happens.
"""

from .errors import (
    DimensionMismatch,
    DomainError,
    EmptySupport,
    GuaranteeViolation,
    InvalidConfig,
    InvalidOrder,
    InvalidSparsity,
    ParseError,
    PreconditionViolated,
    SomplabError,
    SubsetBudgetExceeded,
    TraceMismatch,
    ZeroReference,
)
from .guarantees import (
    MODES,
    GuaranteeReport,
    check_guarantee,
    error_amplification,
    perturbation_magnitude,
    perturbation_magnitude_for_mode,
    recovery_threshold,
)
from .harness import (
    ExperimentReport,
    FilterDeviationDiagnostic,
    FilterProximityDiagnostic,
    PointSummary,
    TrialChecks,
    TrialRecord,
    filter_deviation_diagnostic,
    matched_filter_oracle,
    reference_omp_smv,
    render_report,
    run_experiment,
    run_trial,
    selected_scores_vanish,
    trial_seeds,
)
from .matrixio import read_matrix, write_matrix
from .model import (
    RowNormProfile,
    min_support_row_norm,
    relative_frobenius_error,
    row_norms,
    support_of,
)
from .perturb import (
    B_MODES,
    ENSEMBLES,
    InstanceConfig,
    PerturbationSpec,
    apply_perturbation,
    calibrate_perturbation,
    coherent_pair_matrix,
    gen_sensing_matrix,
    gen_sparse_signal,
    low_coherence_frame,
)
from .rip import (
    DEFAULT_SUBSET_BUDGET,
    InequalityDiagnostic,
    PerturbationLevels,
    RicEstimate,
    SandwichDiagnostic,
    inner_product_check,
    measure_perturbation_levels,
    projected_isometry_check,
    residual_sensing_matrix,
    ric_exact,
    selected_span_projector,
    submatrix_spectral_norm,
)
from .solver import (
    IterationTrace,
    RecoveryResult,
    SolverOptions,
    least_squares_on_support,
    match_scores,
    solve_perturbed,
    somp_solve,
)

__version__ = "0.1.0"

__all__ = [
    "B_MODES",
    "DEFAULT_SUBSET_BUDGET",
    "DimensionMismatch",
    "DomainError",
    "EmptySupport",
    "ENSEMBLES",
    "ExperimentReport",
    "FilterDeviationDiagnostic",
    "FilterProximityDiagnostic",
    "GuaranteeReport",
    "GuaranteeViolation",
    "InequalityDiagnostic",
    "InstanceConfig",
    "InvalidConfig",
    "InvalidOrder",
    "InvalidSparsity",
    "IterationTrace",
    "MODES",
    "ParseError",
    "PerturbationLevels",
    "PerturbationSpec",
    "PointSummary",
    "PreconditionViolated",
    "RecoveryResult",
    "RicEstimate",
    "RowNormProfile",
    "SandwichDiagnostic",
    "SolverOptions",
    "SomplabError",
    "SubsetBudgetExceeded",
    "TraceMismatch",
    "TrialChecks",
    "TrialRecord",
    "ZeroReference",
    "apply_perturbation",
    "calibrate_perturbation",
    "check_guarantee",
    "coherent_pair_matrix",
    "error_amplification",
    "filter_deviation_diagnostic",
    "gen_sensing_matrix",
    "gen_sparse_signal",
    "inner_product_check",
    "least_squares_on_support",
    "low_coherence_frame",
    "match_scores",
    "matched_filter_oracle",
    "measure_perturbation_levels",
    "min_support_row_norm",
    "perturbation_magnitude",
    "perturbation_magnitude_for_mode",
    "projected_isometry_check",
    "read_matrix",
    "recovery_threshold",
    "reference_omp_smv",
    "relative_frobenius_error",
    "render_report",
    "residual_sensing_matrix",
    "ric_exact",
    "row_norms",
    "run_experiment",
    "run_trial",
    "selected_scores_vanish",
    "selected_span_projector",
    "solve_perturbed",
    "somp_solve",
    "submatrix_spectral_norm",
    "support_of",
    "trial_seeds",
    "write_matrix",
]
