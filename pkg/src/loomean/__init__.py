"""Leave-one-out kernel-weighted means.

Estimators built on one primitive: weight each observation by the inverse
of its leave-one-out kernel density.  That primitive turns sample means
into integrals (faster than plain Monte Carlo on flat designs), into
linear functionals of a regression function, and into index-space
estimates from average gradients of radial test functions.
"""
from .dataio import read_dataset, write_dataset
from .density import (
    DEFAULT_FLOOR,
    LooDensityTable,
    full_kde,
    full_kde_gradient,
    loo_density,
    loo_kde_gradient,
    loo_nadaraya_watson,
    loo_variance,
    usable_points,
)
from .exceptions import ConfigError, DatasetFormatError, EstimationError
from .functionals import (
    BandwidthWindow,
    CalibrationModel,
    CltReport,
    FunctionalEstimate,
    bandwidth_window,
    clt_check,
    estimate_functional,
    write_draws_csv,
)
from .indexspace import (
    ADE,
    ADETF,
    AdaptiveADETF,
    CandidateSet,
    TestFunction,
    dependence_score,
    index_direction,
    sample_scale,
)
from .integrate import (
    Box,
    Integrand,
    IntegralEstimate,
    boundary_corrected_box,
    integrate_general,
    integrate_kde,
    integrate_kde_corrected,
    named_integrand,
    plain_mc,
)
from .inverse_regression import SAVE, SIR, SlicedInverseRegression
from .kernels import (
    EPANECHNIKOV,
    GAUSSIAN,
    GAUSSIAN_HIGH_ORDER,
    KernelSpec,
    adetf_bandwidth,
    integration_bandwidth,
    unit_ball_volume,
)
from .simbench import (
    BenchCell,
    ModelSpec,
    ReplicationResult,
    SimData,
    SummaryRow,
    expand_config,
    generate,
    iter_benchmark,
    paired_sign_counts,
    run_benchmark,
    summarize,
    write_results_csv,
    write_summary_csv,
)
from .subspace import (
    SubspaceEstimate,
    principal_directions,
    projector_from_basis,
    subspace_error,
    subspace_from_vectors,
)

__version__ = "0.1.0"

__all__ = [
    "ADE",
    "ADETF",
    "AdaptiveADETF",
    "BandwidthWindow",
    "BenchCell",
    "Box",
    "CalibrationModel",
    "CandidateSet",
    "CltReport",
    "ConfigError",
    "DEFAULT_FLOOR",
    "DatasetFormatError",
    "EPANECHNIKOV",
    "EstimationError",
    "FunctionalEstimate",
    "GAUSSIAN",
    "GAUSSIAN_HIGH_ORDER",
    "Integrand",
    "IntegralEstimate",
    "KernelSpec",
    "LooDensityTable",
    "ModelSpec",
    "ReplicationResult",
    "SAVE",
    "SIR",
    "SimData",
    "SlicedInverseRegression",
    "SubspaceEstimate",
    "SummaryRow",
    "TestFunction",
    "adetf_bandwidth",
    "bandwidth_window",
    "boundary_corrected_box",
    "clt_check",
    "dependence_score",
    "estimate_functional",
    "expand_config",
    "full_kde",
    "full_kde_gradient",
    "generate",
    "index_direction",
    "integrate_general",
    "integrate_kde",
    "integrate_kde_corrected",
    "integration_bandwidth",
    "iter_benchmark",
    "loo_density",
    "loo_kde_gradient",
    "loo_nadaraya_watson",
    "loo_variance",
    "named_integrand",
    "paired_sign_counts",
    "plain_mc",
    "principal_directions",
    "projector_from_basis",
    "read_dataset",
    "run_benchmark",
    "sample_scale",
    "subspace_error",
    "subspace_from_vectors",
    "summarize",
    "unit_ball_volume",
    "usable_points",
    "write_dataset",
    "write_draws_csv",
    "write_results_csv",
    "write_summary_csv",
]
