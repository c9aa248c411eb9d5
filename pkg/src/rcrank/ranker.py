"""Scikit-learn style wrapper around the boosting trainer.

Follows the ranker convention of group-aware fitting: ``fit(X, y, qid)``
where ``qid`` assigns each row to its query.  Composes with sklearn
tooling through ``BaseEstimator`` (``get_params`` / ``set_params``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import dataset as ds
from .boosting import TrainConfig, train
from .metrics import mean_ndcg, parse_metric
from .validation import check_feature_matrix, check_labels, check_qid


class LambdaMARTRanker(BaseEstimator):
    """Gradient-boosted ranker optimizing NDCG@k via pairwise gradients.

    Parameters
    ----------
    tree_variant : {"oblivious", "standard"}
        Weak learner shape.  Oblivious trees use one splitting rule per
        level and require ``leaves`` to be a power of two.
    leaves : int
        Leaf budget per tree (exact leaf count for oblivious trees).
    learning_rate : float
        Shrinkage applied to every tree's output.
    max_trees : int
        Forest size cap; validation data may truncate below it.
    metric : str
        Optimization and evaluation target, ``ndcg@<k>``.
    sigma : float
        Steepness of the pairwise logistic in the gradient computation.
    seed : int
        Recorded for provenance; training itself is deterministic.
    """

    def __init__(
        self,
        tree_variant: str = "oblivious",
        leaves: int = 64,
        learning_rate: float = 0.11,
        max_trees: int = 1000,
        metric: str = "ndcg@10",
        sigma: float = 1.0,
        seed: int = 42,
    ):
        self.tree_variant = tree_variant
        self.leaves = leaves
        self.learning_rate = learning_rate
        self.max_trees = max_trees
        self.metric = metric
        self.sigma = sigma
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            tree_variant=self.tree_variant,
            leaves=self.leaves,
            learning_rate=self.learning_rate,
            max_trees=self.max_trees,
            metric=parse_metric(self.metric),
            sigma=self.sigma,
            seed=self.seed,
        )

    @staticmethod
    def _to_dataset(X, y, qid) -> ds.Dataset:
        X = check_feature_matrix(X)
        y = check_labels(y, len(X))
        qid = check_qid(qid, len(X))
        return ds.from_arrays(X, y, qid)

    def fit(self, X, y, qid, valid=None, progress: bool = False):
        """Train on (X, y, qid); ``valid`` is an optional matching triple
        used to pick the best forest length.  Returns self."""
        train_data = self._to_dataset(X, y, qid)
        valid_data = self._to_dataset(*valid) if valid is not None else None
        self.ensemble_, self.training_log_ = train(
            train_data, valid_data, self._config(), progress=progress
        )
        self.n_trees_ = len(self.ensemble_)
        return self

    def _fitted_ensemble(self):
        if not hasattr(self, "ensemble_"):
            raise NotFittedError(
                "This LambdaMARTRanker instance is not fitted yet; call fit first."
            )
        return self.ensemble_

    def predict(self, X) -> np.ndarray:
        """Ranking scores, one per row; higher means ranked earlier."""
        ensemble = self._fitted_ensemble()
        X = check_feature_matrix(X, ensemble.feature_count)
        return ensemble.score_matrix(X)

    def score(self, X, y, qid) -> float:
        """Mean per-query NDCG@k of the induced ordering."""
        ensemble = self._fitted_ensemble()
        data = self._to_dataset(X, y, qid)
        if data.feature_count != ensemble.feature_count:
            raise ValueError(
                f"X has {data.feature_count} features, expected {ensemble.feature_count}"
            )
        scores = ensemble.score_matrix(data.stacked()[0])
        return mean_ndcg(data, scores, ensemble.metric)
