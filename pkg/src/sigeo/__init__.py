"""Fisher geometry on singular statistical models.

Numerical toolkit for the Fisher metric and Fisher-Rao distances on
finite-dimensional (possibly singular) statistical models, covering-based
Hausdorff measure and dimension in the Fisher distance, Jeffrey densities,
Markov-kernel pushforwards with their monotonicity properties, and
variance-vs-inverse-Fisher gap checks for estimators.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateRegionError,
    DomainError,
    InsufficientScaleError,
    IntegrationError,
    NotDominated,
    OutsideRangeError,
    SamplingError,
    SigeoError,
    SparseCloudError,
    UsageError,
)
from .measures import (
    Measure,
    SampleSpace,
    TangentVector,
    finite_space,
    grid1d_space,
    grid2d_space,
    integrate,
    measure_from_json,
    measure_to_json,
    probability_measure,
    radon_nikodym,
    tv_norm,
)
from .models import (
    Box,
    CurveInModel,
    ParamModel,
    bernoulli_family,
    categorical_family,
    gaussian_location2d_family,
    gaussian_location_family,
    gaussian_location_scale_family,
    gaussian_mixture,
    get_model,
    normalized_friedrich_model,
    product_model,
    tangent_at,
    weak_oscillatory_measure,
    weak_oscillatory_model,
    weak_oscillatory_velocity,
)
from .fisher import (
    FisherMatrix,
    degeneracy_rank,
    fisher_inner,
    fisher_matrix,
    two_integrability_probe,
)
from .distance import (
    DistanceOptions,
    PathResult,
    curve_length,
    fisher_distance,
    metric_axiom_check,
    tv_bound_check,
)
from .markov import (
    MarkovKernel,
    identity_kernel,
    monotonicity_gap,
    permutation_kernel,
    pushforward_measure,
    pushforward_model,
    pushforward_tangent,
    random_kernel,
    sufficiency_check,
)
from .hausdorff import (
    CoverReport,
    MetricCloud,
    alpha_k,
    cloud_from_params,
    covering_number,
    covering_profile,
    flat_region_dimension_estimate,
    hausdorff_dimension_estimate,
    hausdorff_measure_estimate,
    hausdorff_monotonicity_check,
    jeffrey_density,
    jeffrey_measure,
    jeffrey_vs_hausdorff_check,
)
from .estimation import (
    CramerRaoResult,
    Estimator,
    PhiMap,
    QuadraticForm,
    Sampling,
    bias,
    cramer_rao_gap,
    identity_chart,
    inverse_fisher_form,
    mean_estimator,
    mse_form,
    phi_mean,
    regularity_probe,
    variance_form,
    vmse_residual,
)
