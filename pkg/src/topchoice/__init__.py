"""topchoice: strength estimation and diagnostics for top-1 choice data.

A comparison observation is a set of two or more items plus the single
chosen item.  The package samples such data from random-utility models,
fits item strengths by maximum likelihood or rank breaking, computes
the spectral connectivity diagnostics of comparison schedules, bounds
the attainable estimation error, and classifies two-class strength
vectors by point scores.
"""

from ._kernels import backend_name
from .bounds import (
    BoundReport,
    ModelConstants,
    bt_pair_constants,
    cramer_rao_lower_bound,
    cramer_rao_uniform,
    luce_constants,
    mse_upper_bound,
)
from .choice import (
    choice_prob,
    choice_prob_grad,
    choice_prob_hessian,
    difficulty,
    matched_weight,
    slope_at_zero,
    slope_representations,
)
from .classifier import ClassificationResult, classify_sample_complexity, point_score_classify
from .comparisons import (
    Dataset,
    LaplacianSpectrum,
    Observation,
    WeightedAdjacency,
    connectivity_threshold,
    expected_adjacency_unbiased,
    fiedler_prefix_curve,
    ingest,
    laplacian,
    resolve_weight,
    spectrum,
    weighted_adjacency,
)
from .errors import (
    DesignError,
    DisconnectedError,
    NumericalError,
    ParseError,
    TopChoiceError,
    UnsupportedFormError,
    UnsupportedModelError,
    ValidationError,
)
from .estimators import (
    EstimateReport,
    EstimatorConfig,
    estimate,
    loglik,
    loglik_grad,
    loglik_hessian_luce,
    mse,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    run_fiedler_curve,
    run_mse_vs_k,
    top_n_restriction,
)
from .noise import NoiseModel, parse_model
from .sampler import (
    ComparisonDesign,
    ParamVector,
    sample_choice,
    sample_dataset,
    sample_two_class_theta,
    substream,
)

__version__ = "0.1.0"
