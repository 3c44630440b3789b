"""Random matrices driven by stationary correlated fields.

The package covers the full pipeline: field models (linear and second order
Volterra lattice fields), their exact covariances and spectral kernels,
Wigner-type and Gram ensembles built from field patches, empirical spectra
with Levy/Kolmogorov comparisons, deterministic limit equations solved by
damped fixed point iteration, and Monte Carlo harnesses for universality,
limit, and concentration experiments.
"""

__version__ = "0.1.0"

from .covariance import (
    ConditionReport,
    CovarianceFunction,
    SpectralKernel,
    check_conditions,
    gamma_empirical,
    gamma_from_linear,
    gamma_from_volterra,
    spectral_kernel,
)
from .ensembles import (
    BlockDecompositionReport,
    BlockingPlan,
    GramEnsemble,
    SymmetricEnsemble,
    build_gram,
    build_wigner,
    embed_gram_symmetric,
    lindeberg_decomposition_check,
)
from .errors import (
    BranchError,
    CheckFailure,
    ConditionError,
    ConfigError,
    ConvergenceError,
    CorrspecError,
    DimensionError,
    DomainError,
    EmbeddingError,
    InvalidCovarianceError,
    ModelError,
    NumericError,
    PlanError,
    SupportCoverageError,
    ValidationError,
)
from .field_models import (
    FieldPatch,
    InnovationSpec,
    LinearCoefficients,
    VolterraCoefficients,
    WindowParameter,
    sample_gaussian_matched_field,
    sample_innovations,
    sample_linear_field,
    sample_volterra_field,
    truncate_to_window,
)
from .harness import (
    ConcentrationReport,
    ExperimentConfig,
    LimitComparisonReport,
    UniversalityReport,
    analytic_covariance,
    run_concentration,
    run_limit_comparison,
    run_universality,
    sample_spectrum,
)
from .limits import (
    LimitSolution,
    SolverConfig,
    SpectralMeasureOnLine,
    invert_stieltjes,
    reference_stieltjes,
    solve_gram_grid,
    solve_gram_limit,
    solve_kp,
    solve_kp_grid,
    solve_separable,
    solve_separable_grid,
)
from .spectra import (
    DistributionFunction,
    EmpiricalSpectrum,
    distribution_distance,
    eigenvalues,
    stieltjes_of_spectrum,
    trace_comparison_bound,
    write_distribution_csv,
    write_spectrum_csv,
)

__all__ = [
    "__version__",
    # errors
    "CorrspecError",
    "ValidationError",
    "DimensionError",
    "ModelError",
    "InvalidCovarianceError",
    "ConditionError",
    "PlanError",
    "DomainError",
    "ConfigError",
    "NumericError",
    "EmbeddingError",
    "ConvergenceError",
    "BranchError",
    "SupportCoverageError",
    "CheckFailure",
    # field models
    "InnovationSpec",
    "LinearCoefficients",
    "VolterraCoefficients",
    "FieldPatch",
    "WindowParameter",
    "sample_innovations",
    "sample_linear_field",
    "sample_volterra_field",
    "sample_gaussian_matched_field",
    "truncate_to_window",
    # covariance
    "CovarianceFunction",
    "SpectralKernel",
    "ConditionReport",
    "gamma_from_linear",
    "gamma_from_volterra",
    "gamma_empirical",
    "check_conditions",
    "spectral_kernel",
    # ensembles
    "SymmetricEnsemble",
    "GramEnsemble",
    "BlockingPlan",
    "BlockDecompositionReport",
    "build_wigner",
    "build_gram",
    "embed_gram_symmetric",
    "lindeberg_decomposition_check",
    # spectra
    "EmpiricalSpectrum",
    "DistributionFunction",
    "eigenvalues",
    "stieltjes_of_spectrum",
    "distribution_distance",
    "trace_comparison_bound",
    "write_spectrum_csv",
    "write_distribution_csv",
    # limits
    "SolverConfig",
    "SpectralMeasureOnLine",
    "LimitSolution",
    "solve_kp",
    "solve_kp_grid",
    "solve_gram_limit",
    "solve_gram_grid",
    "solve_separable",
    "solve_separable_grid",
    "invert_stieltjes",
    "reference_stieltjes",
    # harness
    "ExperimentConfig",
    "UniversalityReport",
    "LimitComparisonReport",
    "ConcentrationReport",
    "analytic_covariance",
    "sample_spectrum",
    "run_universality",
    "run_limit_comparison",
    "run_concentration",
]
