import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rcrank.boosting import ConfigError
from rcrank.ranker import LambdaMARTRanker
from conftest import make_separable_dataset


def arrays_from(data):
    X, y, indptr = data.stacked()
    qid = np.repeat([g.query_id for g in data.groups], np.diff(indptr))
    return X, y, qid


@pytest.fixture
def fitted(rng):
    data = make_separable_dataset(rng, n_queries=30, docs_per_query=8)
    X, y, qid = arrays_from(data)
    ranker = LambdaMARTRanker(leaves=8, learning_rate=0.15, max_trees=15)
    return ranker.fit(X, y, qid), (X, y, qid)


class TestEstimatorApi:
    def test_get_params_round_trip(self):
        ranker = LambdaMARTRanker(leaves=16, learning_rate=0.13)
        params = ranker.get_params()
        assert params["leaves"] == 16
        assert params["learning_rate"] == 0.13
        again = LambdaMARTRanker(**params)
        assert again.get_params() == params

    def test_set_params(self):
        ranker = LambdaMARTRanker()
        ranker.set_params(leaves=32, tree_variant="standard")
        assert ranker.leaves == 32
        assert ranker.tree_variant == "standard"

    def test_clone(self):
        ranker = LambdaMARTRanker(leaves=8, max_trees=5)
        cloned = clone(ranker)
        assert cloned.get_params() == ranker.get_params()

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            LambdaMARTRanker().predict(np.zeros((2, 3)))

    def test_invalid_params_raise_at_fit(self, rng):
        data = make_separable_dataset(rng, n_queries=6, docs_per_query=4)
        X, y, qid = arrays_from(data)
        ranker = LambdaMARTRanker(tree_variant="oblivious", leaves=10, max_trees=2)
        with pytest.raises(ConfigError):
            ranker.fit(X, y, qid)


class TestFitPredict:
    def test_learns_separable_ranking(self, fitted):
        ranker, (X, y, qid) = fitted
        assert ranker.score(X, y, qid) >= 0.99
        assert ranker.n_trees_ == len(ranker.ensemble_)

    def test_predict_alignment(self, fitted, rng):
        ranker, (X, _, _) = fitted
        scores = ranker.predict(X)
        assert scores.shape == (len(X),)
        # row order is preserved: scoring a permutation permutes the scores
        perm = rng.permutation(len(X))
        assert np.array_equal(ranker.predict(X[perm]), scores[perm])

    def test_validation_triple_controls_truncation(self, rng):
        data = make_separable_dataset(rng, n_queries=24, docs_per_query=6)
        train_X, train_y, train_qid = arrays_from(
            type(data)(data.groups[:18], data.feature_count)
        )
        valid_X, valid_y, valid_qid = arrays_from(
            type(data)(data.groups[18:], data.feature_count)
        )
        ranker = LambdaMARTRanker(leaves=8, learning_rate=0.15, max_trees=10)
        ranker.fit(train_X, train_y, train_qid, valid=(valid_X, valid_y, valid_qid))
        curve = [e.valid_ndcg for e in ranker.training_log_.entries]
        assert ranker.n_trees_ == int(np.argmax(curve)) + 1

    def test_feature_width_checked_at_predict(self, fitted):
        ranker, (X, _, _) = fitted
        with pytest.raises(ValueError):
            ranker.predict(X[:, :-1])

    def test_rejects_non_integral_labels(self, rng):
        X = rng.normal(size=(4, 2))
        with pytest.raises(ValueError):
            LambdaMARTRanker().fit(X, [0.5, 1.0, 1.0, 2.0], [0, 0, 1, 1])

    def test_rejects_nan_features(self):
        X = np.array([[0.0, np.nan], [1.0, 2.0]])
        with pytest.raises(ValueError):
            LambdaMARTRanker().fit(X, [1, 2], [0, 0])

    def test_rejects_negative_qid(self, rng):
        X = rng.normal(size=(2, 2))
        with pytest.raises(ValueError):
            LambdaMARTRanker().fit(X, [1, 2], [-1, 0])
