"""Piecewise polynomial chaos surrogates on adaptively partitioned
rectangular domains, with analytic global sensitivity analysis."""

from .core import (
    InputSpace,
    MarginalDistribution,
    Rectangle,
    SampleSet,
    ThresholdMesh,
    conditional_mass,
    filter_samples,
)
from .errors import (
    BudgetExceededError,
    DegenerateOutputError,
    DomainError,
    InsufficientSamplesError,
    TreePceError,
)
from .orthobasis import (
    MAX_DEGREE,
    LegendreBasis,
    MultiIndexSet,
    UnivariateBasis,
    build_univariate_basis,
    design_matrix,
    enumerate_linear,
    evaluate_multivariate,
)
from .pce import (
    PceModel,
    coefficient_count,
    fit_least_squares,
    fit_on_box,
    fit_sparse,
    model_from_json,
    model_to_json,
    r_squared,
    tse,
)
from .sensitivity import (
    DEFAULT_TERM_BUDGET,
    SobolResult,
    TreeSensitivityResult,
    j_integral,
    pick_freeze,
    segment_moments,
    sobol_from_pce,
    sobol_from_tree,
    tree_indices,
)
from .sse import SseModel, coefficient_count_sse, fit_sse, sse_from_json, sse_to_json, tse_sse
from .tree import (
    Ineligible,
    SplitCandidate,
    SplitRecord,
    TreeNode,
    TreePceConfig,
    TreePceModel,
    coefficient_count_tree,
    export_tree,
    fit_tree,
    tree_from_json,
    try_split,
)
from .models import BENCHMARKS, BenchmarkModel, diagonal_2d, oscillatory_multid, sample, step_1d

__version__ = "0.1.0"

__all__ = [
    "BENCHMARKS",
    "BenchmarkModel",
    "BudgetExceededError",
    "DEFAULT_TERM_BUDGET",
    "DegenerateOutputError",
    "DomainError",
    "Ineligible",
    "InputSpace",
    "InsufficientSamplesError",
    "LegendreBasis",
    "MAX_DEGREE",
    "MarginalDistribution",
    "MultiIndexSet",
    "PceModel",
    "Rectangle",
    "SampleSet",
    "SobolResult",
    "SplitCandidate",
    "SplitRecord",
    "SseModel",
    "ThresholdMesh",
    "TreeNode",
    "TreePceConfig",
    "TreePceError",
    "TreePceModel",
    "TreeSensitivityResult",
    "UnivariateBasis",
    "build_univariate_basis",
    "coefficient_count",
    "coefficient_count_sse",
    "coefficient_count_tree",
    "conditional_mass",
    "design_matrix",
    "diagonal_2d",
    "enumerate_linear",
    "evaluate_multivariate",
    "export_tree",
    "filter_samples",
    "fit_least_squares",
    "fit_on_box",
    "fit_sparse",
    "fit_sse",
    "fit_tree",
    "j_integral",
    "model_from_json",
    "model_to_json",
    "oscillatory_multid",
    "pick_freeze",
    "r_squared",
    "sample",
    "segment_moments",
    "sobol_from_pce",
    "sobol_from_tree",
    "sse_from_json",
    "sse_to_json",
    "step_1d",
    "tree_from_json",
    "tree_indices",
    "try_split",
    "tse",
    "tse_sse",
]
