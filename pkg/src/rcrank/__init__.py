"""Learning-to-rank toolkit: LambdaMART boosting with standard regression
trees or level-uniform oblivious trees, NDCG evaluation, decision-table
scoring and a cross-validation experiment harness."""

from .boosting import ConfigError, TrainConfig, TrainingLog, predict_scores, train
from .dataset import (
    Dataset,
    DatasetFormatError,
    Document,
    FoldSplit,
    QueryGroup,
    dataset_stats,
    from_arrays,
    load_dataset,
    parse_line,
    save_dataset,
    split_folds,
    subsample,
)
from .experiment import (
    FeatureUsage,
    GridCell,
    feature_usage,
    paired_significance,
    run_cv,
    run_grid,
    select_top_features,
)
from .lambdas import LambdaState, compute_lambdas, delta_ndcg
from .metrics import (
    MetricConfig,
    Ranking,
    dcg,
    discount,
    gain,
    idcg,
    mean_ndcg,
    ndcg_at_k,
    parse_metric,
    rank_by_score,
)
from .model_io import Ensemble, ModelFormatError, load_model, save_model, score
from .ranker import LambdaMARTRanker
from .trees import (
    DecisionTable,
    ObliviousTree,
    RegressionTree,
    SplitCandidateSet,
    SplittingRule,
    best_level_rule,
    build_oblivious_tree,
    build_regression_tree,
    level_cost,
    newton_adjust,
    split_samples,
    to_decision_table,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Dataset",
    "DatasetFormatError",
    "DecisionTable",
    "Document",
    "Ensemble",
    "FeatureUsage",
    "FoldSplit",
    "GridCell",
    "LambdaMARTRanker",
    "LambdaState",
    "MetricConfig",
    "ModelFormatError",
    "ObliviousTree",
    "QueryGroup",
    "Ranking",
    "RegressionTree",
    "SplitCandidateSet",
    "SplittingRule",
    "TrainConfig",
    "TrainingLog",
    "best_level_rule",
    "build_oblivious_tree",
    "build_regression_tree",
    "compute_lambdas",
    "dataset_stats",
    "dcg",
    "delta_ndcg",
    "discount",
    "feature_usage",
    "from_arrays",
    "gain",
    "idcg",
    "level_cost",
    "load_dataset",
    "load_model",
    "mean_ndcg",
    "ndcg_at_k",
    "newton_adjust",
    "paired_significance",
    "parse_line",
    "parse_metric",
    "predict_scores",
    "rank_by_score",
    "run_cv",
    "run_grid",
    "save_dataset",
    "save_model",
    "score",
    "select_top_features",
    "split_folds",
    "split_samples",
    "subsample",
    "to_decision_table",
    "train",
]
