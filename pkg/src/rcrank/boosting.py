"""The gradient boosting training loop.

Each iteration computes pair-based gradients against the current scores,
fits one weak learner (standard or oblivious) to them, replaces its leaf
values by the second-order adjustment, and adds it with a constant
shrinkage weight.  After the last iteration the forest is truncated to the
prefix with the best validation NDCG.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .lambdas import compute_dataset_lambdas
from .metrics import MetricConfig, mean_ndcg
from .model_io import VARIANT_OBLIVIOUS, VARIANT_STANDARD, Ensemble
from .trees import (
    ObliviousTree,
    SplitCandidateSet,
    build_oblivious_tree,
    build_regression_tree,
    newton_adjust,
)


class ConfigError(ValueError):
    """Raised for invalid training parameters, before any work starts."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    tree_variant: str = VARIANT_OBLIVIOUS
    leaves: int = 64
    learning_rate: float = 0.11
    max_trees: int = 1000
    metric: MetricConfig = MetricConfig(cutoff=10)
    sigma: float = 1.0
    seed: int = 42

    def __post_init__(self) -> None:
        if self.tree_variant not in (VARIANT_OBLIVIOUS, VARIANT_STANDARD):
            raise ConfigError(f"unknown tree variant {self.tree_variant!r}")
        if self.leaves < 2:
            raise ConfigError(f"leaves must be >= 2, got {self.leaves}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_trees < 1:
            raise ConfigError(f"max_trees must be >= 1, got {self.max_trees}")
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.tree_variant == VARIANT_OBLIVIOUS and (
            self.leaves & (self.leaves - 1)
        ) != 0:
            raise ConfigError("leaves must be a power of two for oblivious trees")

    @property
    def depth(self) -> int:
        """Oblivious tree depth implied by the leaf budget."""
        return int(math.log2(self.leaves))


@dataclass
class IterationStats:
    iteration: int
    train_ndcg: float
    valid_ndcg: float
    leaves: int
    train_scores: np.ndarray | None = None


@dataclass
class TrainingLog:
    """One entry per built tree, plus the validated forest length."""

    metric_name: str
    entries: list[IterationStats] = field(default_factory=list)
    chosen_trees: int = 0


def _leaf_output(tree, assignment: np.ndarray) -> np.ndarray:
    if isinstance(tree, ObliviousTree):
        return tree.leaf_values[assignment]
    return tree.value[assignment]


def train(
    train_data: Dataset,
    valid_data: Dataset | None,
    config: TrainConfig,
    progress: bool = True,
    keep_score_snapshots: bool = False,
    log: TrainingLog | None = None,
) -> tuple[Ensemble, TrainingLog]:
    """Fit a boosted forest on ``train_data``.

    ``valid_data`` drives the final truncation: the returned ensemble is the
    prefix with the highest validation mean NDCG (earliest on ties).  With no
    validation data the full forest is returned.  Training is deterministic
    for fixed inputs.  Progress goes to stderr, one line per iteration.

    Passing a ``log`` lets another thread watch training: entries are
    immutable and appended one per finished iteration, so a concurrent
    reader always sees a consistent snapshot prefix.
    """
    if valid_data is not None and valid_data.feature_count != train_data.feature_count:
        raise ConfigError(
            f"validation feature count {valid_data.feature_count} "
            f"!= training feature count {train_data.feature_count}"
        )
    X, _, _ = train_data.stacked()
    candidates = SplitCandidateSet.from_data(X)
    bins = candidates.bin(X)
    scores = np.zeros(len(X))
    valid_X = valid_data.stacked()[0] if valid_data is not None else None
    valid_scores = np.zeros(len(valid_X)) if valid_X is not None else None

    k = config.metric.cutoff
    trees: list = []
    if log is None:
        log = TrainingLog(metric_name=config.metric.name)
    else:
        log.metric_name = config.metric.name
        log.entries.clear()
    for t in range(1, config.max_trees + 1):
        state = compute_dataset_lambdas(train_data, scores, config.metric, config.sigma)
        if config.tree_variant == VARIANT_OBLIVIOUS:
            tree = build_oblivious_tree(
                X, state.lambdas, config.depth, candidates, bins=bins
            )
        else:
            tree = build_regression_tree(
                X, state.lambdas, config.leaves, candidates, bins=bins
            )
        assignment = tree.apply(X)
        tree = newton_adjust(tree, assignment, state)
        trees.append(tree)
        scores += config.learning_rate * _leaf_output(tree, assignment)

        train_ndcg = mean_ndcg(train_data, scores, config.metric)
        if valid_data is not None:
            valid_scores += config.learning_rate * tree.score_batch(valid_X)
            valid_ndcg = mean_ndcg(valid_data, valid_scores, config.metric)
        else:
            valid_ndcg = float("nan")
        log.entries.append(
            IterationStats(
                iteration=t,
                train_ndcg=train_ndcg,
                valid_ndcg=valid_ndcg,
                leaves=tree.n_leaves,
                train_scores=scores.copy() if keep_score_snapshots else None,
            )
        )
        if progress:
            print(
                f"iter={t} train_ndcg@{k}={train_ndcg:.6f} valid_ndcg@{k}={valid_ndcg:.6f}",
                file=sys.stderr,
            )

    if valid_data is not None:
        valid_curve = [e.valid_ndcg for e in log.entries]
        n_keep = int(np.argmax(valid_curve)) + 1
    else:
        n_keep = len(trees)
    log.chosen_trees = n_keep

    ensemble = Ensemble(
        variant=config.tree_variant,
        feature_count=train_data.feature_count,
        metric=config.metric,
        weights=[config.learning_rate] * n_keep,
        trees=trees[:n_keep],
    )
    return ensemble, log


def predict_scores(ensemble: Ensemble, dataset: Dataset) -> np.ndarray:
    """Ensemble scores for every document, in dataset order."""
    if dataset.feature_count != ensemble.feature_count:
        raise ValueError(
            f"dataset has {dataset.feature_count} features, "
            f"model expects {ensemble.feature_count}"
        )
    return ensemble.score_matrix(dataset.stacked()[0])
