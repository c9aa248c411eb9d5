import itertools

import numpy as np
import pytest

from rcrank.metrics import (
    MetricConfig,
    dcg,
    discount,
    gain,
    idcg,
    mean_ndcg,
    ndcg_at_k,
    parse_metric,
    rank_by_score,
)
from conftest import make_random_dataset, oracle_best_dcg, oracle_dcg

CFG = MetricConfig(cutoff=10, discount_shift=1.0)


class TestGain:
    @pytest.mark.parametrize("label,expected", [(1, 1.0), (3, 7.0), (5, 31.0)])
    def test_exponential(self, label, expected):
        assert gain(label) == expected

    def test_vectorized(self):
        assert np.array_equal(gain(np.array([1, 2])), np.array([1.0, 3.0]))


class TestDiscount:
    def test_first_position(self):
        assert discount(1, CFG) == 1.0

    def test_beyond_cutoff_is_zero(self):
        assert discount(11, CFG) == 0.0

    def test_position_three(self):
        assert discount(3, CFG) == pytest.approx(0.5)


class TestRankByScore:
    def test_descending(self):
        assert rank_by_score([0.1, 0.9, 0.5]).order.tolist() == [1, 2, 0]

    def test_tie_breaks_by_index(self):
        assert rank_by_score([0.5, 0.5]).order.tolist() == [0, 1]

    def test_all_equal_is_identity(self):
        assert rank_by_score([1.0] * 7).order.tolist() == list(range(7))

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            rank_by_score([0.0, float("nan")])

    def test_positions_inverse(self):
        r = rank_by_score([3.0, 1.0, 2.0])
        pos = r.positions()
        assert pos.tolist() == [1, 3, 2]


class TestDcg:
    def test_descending_order(self):
        assert dcg([3, 2, 1], CFG) == pytest.approx(9.392789260714373, abs=1e-12)

    def test_ascending_order(self):
        assert dcg([1, 2, 3], CFG) == pytest.approx(6.392789260714372, abs=1e-12)

    def test_single_document(self):
        assert dcg([1], CFG) == 1.0


class TestIdcg:
    def test_equals_descending_dcg(self):
        assert idcg([1, 2, 3], CFG) == pytest.approx(9.392789260714373, abs=1e-12)

    def test_two_equal_labels(self):
        assert idcg([1, 1], CFG) == pytest.approx(1.6309297535714575, abs=1e-12)

    def test_matches_brute_force_maximum(self, rng):
        for _ in range(50):
            m = int(rng.integers(1, 7))
            labels = rng.integers(1, 6, size=m).tolist()
            assert idcg(labels, CFG) == pytest.approx(
                oracle_best_dcg(labels), abs=1e-12
            )


class TestNdcg:
    def test_perfect_order(self):
        assert ndcg_at_k([1, 2, 3], [1.0, 2.0, 3.0], CFG) == pytest.approx(1.0)

    def test_reversed_order(self):
        value = ndcg_at_k([1, 2, 3], [0.9, 0.5, 0.1], CFG)
        assert value == pytest.approx(6.392789260714372 / 9.392789260714373, abs=1e-9)

    def test_single_document(self):
        assert ndcg_at_k([4], [0.123], CFG) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ndcg_at_k([1, 2], [0.5], CFG)

    def test_bounded_in_unit_interval(self, rng):
        for _ in range(200):
            m = int(rng.integers(1, 12))
            labels = rng.integers(1, 6, size=m)
            scores = rng.normal(size=m)
            value = ndcg_at_k(labels, scores, CFG)
            assert 0.0 <= value <= 1.0

    def test_invariant_under_monotone_score_transform(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 10))
            labels = rng.integers(1, 6, size=m)
            scores = rng.normal(size=m)
            base = ndcg_at_k(labels, scores, CFG)
            assert ndcg_at_k(labels, 3.0 * scores + 7.0, CFG) == pytest.approx(base)
            assert ndcg_at_k(labels, np.exp(scores), CFG) == pytest.approx(base)

    def test_idcg_upper_bounds_all_permutations(self, rng):
        for _ in range(30):
            m = int(rng.integers(1, 6))
            labels = rng.integers(1, 6, size=m).tolist()
            ideal = idcg(labels, CFG)
            for perm in itertools.permutations(labels):
                assert dcg(list(perm), CFG) <= ideal + 1e-12

    def test_perturbation_below_cutoff_is_invisible(self, rng):
        cfg = MetricConfig(cutoff=3)
        labels = rng.integers(1, 6, size=8)
        scores = np.linspace(8.0, 1.0, 8)
        base = ndcg_at_k(labels, scores, cfg)
        perturbed = scores.copy()
        perturbed[4:] += rng.uniform(-0.4, 0.4, size=4)
        assert ndcg_at_k(labels, perturbed, cfg) == base


class TestMeanNdcg:
    def test_average_of_two_queries(self, rng):
        data = make_random_dataset(rng, n_queries=2, docs_per_query=4)
        X, y, indptr = data.stacked()
        scores = np.zeros(data.total_documents)
        # perfect order for group 0, worst order for group 1
        scores[indptr[0] : indptr[1]] = y[indptr[0] : indptr[1]]
        scores[indptr[1] : indptr[2]] = -y[indptr[1] : indptr[2]].astype(float)
        first = ndcg_at_k(y[indptr[0] : indptr[1]], scores[indptr[0] : indptr[1]], CFG)
        second = ndcg_at_k(y[indptr[1] : indptr[2]], scores[indptr[1] : indptr[2]], CFG)
        assert mean_ndcg(data, scores, CFG) == pytest.approx((first + second) / 2)
        assert first == pytest.approx(1.0)

    def test_perfect_everywhere(self, rng):
        data = make_random_dataset(rng, n_queries=5)
        scores = data.stacked()[1].astype(float)
        assert mean_ndcg(data, scores, CFG) == pytest.approx(1.0)

    def test_matches_per_query_oracle(self, rng):
        data = make_random_dataset(rng, n_queries=5, docs_per_query=6)
        scores = rng.normal(size=data.total_documents)
        expected = 0.0
        offset = 0
        for group in data.groups:
            part = scores[offset : offset + len(group)]
            order = sorted(range(len(group)), key=lambda i: (-part[i], i))
            ranked = [int(group.labels[i]) for i in order]
            expected += oracle_dcg(ranked) / oracle_best_dcg(group.labels.tolist())
            offset += len(group)
        expected /= len(data.groups)
        assert mean_ndcg(data, scores, CFG) == pytest.approx(expected, abs=1e-12)


class TestMetricConfig:
    def test_parse(self):
        assert parse_metric("ndcg@10") == MetricConfig(cutoff=10)
        assert parse_metric("ndcg@3").cutoff == 3

    @pytest.mark.parametrize("bad", ["ndcg", "ndcg@0.5", "map@10", "ndcg@"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_metric(bad)

    def test_invalid_cutoff(self):
        with pytest.raises(ValueError):
            MetricConfig(cutoff=0)

    def test_invalid_shift(self):
        with pytest.raises(ValueError):
            MetricConfig(discount_shift=0.0)

    def test_name_round_trip(self):
        assert parse_metric(MetricConfig(cutoff=7).name).cutoff == 7
