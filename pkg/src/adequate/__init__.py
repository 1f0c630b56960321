"""Adequacy regions for individual probability models.

The package decides which single probability models (one (mu, sigma)
pair, one Poisson rate, one (location, scale) functional value) are
adequate approximations to a dataset, attaches multiple p-values to
each candidate, and provides region-based hypothesis tests plus a
noise-gated forward selection for regression covariates.
"""

from .errors import (
    AdequateError,
    ConfigurationError,
    DataError,
    DomainError,
    ParameterError,
    SolverError,
)
from .gauss_region import (
    Calibration,
    GaussFeatures,
    GridConfig,
    LocationScale,
    MembershipResult,
    RefineConfig,
    RegionGrid,
    SimConfig,
    calibrate,
    gauss_features,
    member_pvalues,
    min_alpha_nonempty,
    mu_projection,
    null_tables,
    outlier_sweep,
    region_p_value,
    region_scan,
    subsample_fit_size,
    t_confidence_interval,
    t_test_pvalue,
    test_mu_bound,
)
from .m_functional import MConfig, MEstimate, chi, m_region, psi, solve_m, test_tl_bound, tl_projection
from .numerics import (
    DistFn,
    EmpiricalDist,
    SimSpec,
    beta_dist,
    cdf,
    kolmogorov_distance,
    kolmogorov_quantile,
    kuiper_distance,
    poisson_dist,
    quantile,
    simulate_quantiles,
    standard_normal,
    student_t,
    substream,
)
from .poisson_adequacy import CountSample, chisq_family_stat, lambda_adequacy_set
from .stepwise import (
    RegressionData,
    SelectionResult,
    StepResult,
    best_candidate,
    run_selection,
    should_stop,
    step_pvalue,
    validate_beta_law,
)

__version__ = "0.1.0"
