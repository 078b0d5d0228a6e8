"""Hybrid isotropic covariance models for spatial Gaussian random fields.

Covariance families built as piecewise Gaussian scale mixtures — a hybrid
Cauchy-Matern model (polynomial long-range decay with tunable origin
smoothness) and a hybrid Hole-Effect-Matern model (negative covariances
with Matern local behaviour) — together with the downstream pipeline:
exact field simulation, maximum-likelihood fitting, simple kriging, and
leave-one-out cross-validation scoring.
"""

from .exceptions import (
    FactorizationError,
    ToleranceError,
    UnderflowWarning,
    ValidityError,
)
from .kernels import (
    CauchyParams,
    GenCauchyParams,
    HybridCMParams,
    HybridHMParams,
    KernelSpec,
    MaternParams,
    ParsimoniousCM,
    cauchy,
    evaluate,
    expand_parsimonious,
    gen_cauchy,
    hm_lower_bound,
    hm_validity,
    hybrid_cm,
    hybrid_hm,
    matern,
    mixing_cauchy,
    mixing_matern,
    spec_from_dict,
    spec_to_dict,
    tail_exponent,
    value_at_zero,
)
from .specfun import (
    QuadratureSettings,
    bessel_k,
    gamma_fn,
    gen_inc_gamma,
    reg_gen_inc_gamma,
    reg_lower_gamma,
    reg_upper_gamma,
)
from .mixtures import MixtureSegment, eval_mixture, superposition_mixture
from .randfield import (
    FieldSample,
    Locations,
    SimulationConfig,
    covariance_matrix,
    read_sample_csv,
    sample_uniform_locations,
    simulate,
    write_sample_csv,
)
from .inference import (
    FitOptions,
    FitResult,
    ParamMask,
    aic,
    fit_mle,
    neg_log_likelihood,
    std_errors,
)
from .predict import CVScores, PredictionSet, gaussian_scores, loo_cv, simple_krige

__version__ = "0.1.0"
