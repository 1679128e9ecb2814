"""lcrank: joint sparse coding and neighborhood-based ranking for retrieval.

Fits a dictionary, sparse codes, per-neighborhood linear score predictors
and a ranking score per point by alternating exact block updates of one
objective, then returns points ordered by score. Queries are members of
the fitted point set, marked by a binary indicator.
"""

from .estimator import SparseCodingRanker
from .io import (
    DataFormatError,
    DataSet,
    QueryIndicator,
    RankedResult,
    RankEntry,
    load_dataset,
    load_ranking,
    write_ranking,
    write_trace,
)
from .local_ranking import (
    LocalRankingCache,
    ScoreVector,
    assemble_penalty,
    build_cache,
    local_objective,
    local_penalty,
    predictor_operator,
    recover_predictors,
    solve_scores,
)
from .neighbors import (
    NeighborhoodIndex,
    build_knn,
    gather_local_codes,
    gather_local_scores,
)
from .solver import (
    ConvergenceTrace,
    Hyperparams,
    ModelState,
    ObjectiveParts,
    SolverError,
    StepRecord,
    TraceRow,
    evaluate_objective,
    fit,
    initialize,
    rank,
)
from .sparse_coding import (
    ConvergenceError,
    Dictionary,
    DictionaryUpdate,
    QuadL1Problem,
    build_augmented_problem,
    build_plain_problem,
    coding_objective,
    dictionary_update,
    feature_sign_solve,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "ConvergenceTrace",
    "DataFormatError",
    "DataSet",
    "Dictionary",
    "DictionaryUpdate",
    "Hyperparams",
    "LocalRankingCache",
    "ModelState",
    "NeighborhoodIndex",
    "ObjectiveParts",
    "QuadL1Problem",
    "QueryIndicator",
    "RankEntry",
    "RankedResult",
    "ScoreVector",
    "SolverError",
    "SparseCodingRanker",
    "StepRecord",
    "TraceRow",
    "assemble_penalty",
    "build_augmented_problem",
    "build_cache",
    "build_knn",
    "build_plain_problem",
    "coding_objective",
    "dictionary_update",
    "evaluate_objective",
    "feature_sign_solve",
    "fit",
    "gather_local_codes",
    "gather_local_scores",
    "initialize",
    "load_dataset",
    "load_ranking",
    "local_objective",
    "local_penalty",
    "predictor_operator",
    "rank",
    "recover_predictors",
    "solve_scores",
    "write_ranking",
    "write_trace",
]
