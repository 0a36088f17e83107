"""instascope: benchmark-instance analysis toolkit.

Seeded generation of the 24-function noiseless benchmark suite,
landscape features over shared Latin Hypercube designs, five baseline
derivative-free optimizers under a fixed-budget harness, and corrected
nonparametric tests quantifying how features, performance, and global
properties differ across instances of the same function.
"""

__version__ = "0.1.0"

from .doe import Doe, build_doe, grid2d, lhs_sample
from .ela import FEATURE_CATALOGUE, FeatureVector, compute_all, drop_degenerate
from .optim import (
    ALGORITHMS,
    RunRecord,
    differential_evolution,
    one_plus_one_es,
    pso,
    random_search,
    run_experiment,
    spsa,
)
from .rng import derive_seed
from .stats import (
    RejectionSummary,
    TestRecord,
    benjamini_hochberg,
    ecdf,
    ks_two_sample,
    mann_whitney_u,
    normality_test,
    one_vs_rest_rejection,
    pairwise_rejection_rate,
)
from .suite import (
    FUNCTION_NAMES,
    ProblemId,
    ProblemInstance,
    create_instance,
    evaluate,
    precision,
)
from .transforms import f_pen, lambda_alpha, rotation_from_seed, t_asy, t_osz

__all__ = [
    "__version__",
    "ALGORITHMS",
    "FEATURE_CATALOGUE",
    "FUNCTION_NAMES",
    "Doe",
    "FeatureVector",
    "ProblemId",
    "ProblemInstance",
    "RejectionSummary",
    "RunRecord",
    "TestRecord",
    "benjamini_hochberg",
    "build_doe",
    "compute_all",
    "create_instance",
    "derive_seed",
    "differential_evolution",
    "drop_degenerate",
    "ecdf",
    "evaluate",
    "f_pen",
    "grid2d",
    "ks_two_sample",
    "lambda_alpha",
    "lhs_sample",
    "mann_whitney_u",
    "normality_test",
    "one_plus_one_es",
    "one_vs_rest_rejection",
    "pairwise_rejection_rate",
    "precision",
    "pso",
    "random_search",
    "rotation_from_seed",
    "run_experiment",
    "spsa",
    "t_asy",
    "t_osz",
]
