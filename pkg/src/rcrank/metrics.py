"""Ranking quality measures: DCG, ideal DCG and NDCG@k.

Gain is exponential (2^label - 1) and the position discount is
1/log2(position + z) up to a cut-off rank, zero beyond it.  All functions
are pure and operate on plain numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_METRIC_RE = re.compile(r"^ndcg@(\d+)$")


@dataclass(frozen=True)
class MetricConfig:
    """Cut-off rank and discount shift for NDCG@k evaluation.

    ``cutoff`` is the rank beyond which positions earn no credit;
    ``discount_shift`` is the additive constant z inside the log2 discount.
    """

    cutoff: int = 10
    discount_shift: float = 1.0

    def __post_init__(self) -> None:
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.discount_shift <= 0:
            raise ValueError(
                f"discount_shift must be > 0, got {self.discount_shift}"
            )

    @property
    def name(self) -> str:
        return f"ndcg@{self.cutoff}"


def parse_metric(text: str) -> MetricConfig:
    """Parse a metric name of the form ``ndcg@<k>`` with integer k >= 1."""
    m = _METRIC_RE.match(text.strip())
    if m is None:
        raise ValueError(f"unrecognized metric {text!r}, expected ndcg@<k>")
    return MetricConfig(cutoff=int(m.group(1)))


@dataclass(frozen=True)
class Ranking:
    """A permutation of document indices, best-ranked first.

    ``order[r]`` is the document index occupying rank r (0-based).
    """

    order: np.ndarray

    def positions(self) -> np.ndarray:
        """1-based rank of each document, indexed by document."""
        pos = np.empty(len(self.order), dtype=np.int64)
        pos[self.order] = np.arange(1, len(self.order) + 1)
        return pos


def gain(label):
    """Exponential relevance gain 2^label - 1 (scalar or array)."""
    return np.power(2.0, label) - 1.0


def discount(position, config: MetricConfig = MetricConfig()):
    """Position discount 1/log2(position + z), zero past the cut-off.

    ``position`` is 1-based; accepts scalars or arrays.
    """
    pos = np.asarray(position, dtype=np.float64)
    d = 1.0 / np.log2(pos + config.discount_shift)
    d = np.where(pos <= config.cutoff, d, 0.0)
    return float(d) if np.isscalar(position) else d


def rank_by_score(scores) -> Ranking:
    """Order documents by descending score; ties keep ascending index."""
    s = np.asarray(scores, dtype=np.float64)
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    return Ranking(order=np.argsort(-s, kind="stable"))


def dcg(ranked_labels, config: MetricConfig = MetricConfig()) -> float:
    """Discounted cumulative gain of labels already in ranked order."""
    labels = np.asarray(ranked_labels, dtype=np.float64)
    positions = np.arange(1, len(labels) + 1)
    return float(np.sum(gain(labels) * discount(positions, config)))


def idcg(labels, config: MetricConfig = MetricConfig()) -> float:
    """DCG of the best possible ordering (labels sorted descending)."""
    return dcg(np.sort(np.asarray(labels))[::-1], config)


def ndcg_at_k(labels, scores, config: MetricConfig = MetricConfig()) -> float:
    """NDCG of the ordering induced by ``scores``; 0 when ideal DCG is 0."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise ValueError(
            f"labels and scores length mismatch: {labels.shape} vs {scores.shape}"
        )
    ideal = idcg(labels, config)
    if ideal == 0.0:
        return 0.0
    ranking = rank_by_score(scores)
    return dcg(labels[ranking.order], config) / ideal


def mean_ndcg(dataset, scores, config: MetricConfig = MetricConfig()) -> float:
    """Unweighted mean of per-query NDCG over a whole dataset.

    ``scores`` is a flat array aligned with the dataset's document order
    (group by group, file order within each group).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (dataset.total_documents,):
        raise ValueError(
            f"expected {dataset.total_documents} scores, got {scores.shape}"
        )
    total = 0.0
    offset = 0
    for group in dataset.groups:
        m = len(group)
        total += ndcg_at_k(group.labels, scores[offset : offset + m], config)
        offset += m
    return total / len(dataset.groups)
