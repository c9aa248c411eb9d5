"""Per-document pseudo-gradients for one boosting iteration.

For every document pair (i, j) with label_i > label_j the pair contributes
sigma * rho * dZ to lambda_i (and the negation to lambda_j), where
rho = 1 / (1 + exp(sigma * (s_i - s_j))) and dZ is the absolute NDCG change
of swapping the two documents in the ranking frozen at the start of the
iteration.  Second-order weights accumulate sigma^2 * rho * (1 - rho) * dZ
symmetrically to both pair members.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import MetricConfig, Ranking, discount, gain, idcg, rank_by_score


@dataclass(frozen=True)
class LambdaState:
    """First-order gradients and second-order weights, one entry per document.

    Lambdas sum to zero within each query group; weights are non-negative.
    """

    lambdas: np.ndarray
    weights: np.ndarray


def delta_ndcg(
    labels,
    ranking: Ranking,
    i: int,
    j: int,
    config: MetricConfig = MetricConfig(),
) -> float:
    """Absolute NDCG change from swapping documents i and j in the ranking.

    Equals |gain_i - gain_j| * |discount(pos_i) - discount(pos_j)| / IDCG
    because a swap only touches the two affected positions.
    """
    if i == j:
        raise ValueError("swap requires two distinct documents")
    labels = np.asarray(labels)
    ideal = idcg(labels, config)
    if ideal == 0.0:
        return 0.0
    pos = ranking.positions()
    gain_diff = abs(gain(labels[i]) - gain(labels[j]))
    disc_diff = abs(discount(int(pos[i]), config) - discount(int(pos[j]), config))
    return float(gain_diff * disc_diff / ideal)


def pair_lambdas(
    labels: np.ndarray,
    scores: np.ndarray,
    config: MetricConfig = MetricConfig(),
    sigma: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized lambda/weight accumulation over all pairs of one group."""
    labels = np.asarray(labels, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    m = len(labels)
    lambdas = np.zeros(m)
    weights = np.zeros(m)
    if m < 2:
        return lambdas, weights
    ideal = idcg(labels, config)
    if ideal == 0.0:
        return lambdas, weights

    positions = rank_by_score(scores).positions()
    disc = discount(positions.astype(np.float64), config)
    g = gain(labels)

    # winner[i, j] is True where i should outrank j
    winner = labels[:, None] > labels[None, :]
    if not winner.any():
        return lambdas, weights
    dz = np.abs(g[:, None] - g[None, :]) * np.abs(disc[:, None] - disc[None, :]) / ideal
    with np.errstate(over="ignore"):
        rho = 1.0 / (1.0 + np.exp(sigma * (scores[:, None] - scores[None, :])))

    pair_lambda = np.where(winner, sigma * rho * dz, 0.0)
    pair_weight = np.where(winner, sigma * sigma * rho * (1.0 - rho) * dz, 0.0)
    lambdas = pair_lambda.sum(axis=1) - pair_lambda.sum(axis=0)
    weights = pair_weight.sum(axis=1) + pair_weight.sum(axis=0)
    return lambdas, weights


def compute_lambdas(
    group,
    scores,
    config: MetricConfig = MetricConfig(),
    sigma: float = 1.0,
) -> LambdaState:
    """Lambda state of one query group given its current model scores."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(group),):
        raise ValueError(
            f"expected {len(group)} scores for query {group.query_id}, got {scores.shape}"
        )
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    lambdas, weights = pair_lambdas(group.labels, scores, config, sigma)
    return LambdaState(lambdas=lambdas, weights=weights)


def compute_dataset_lambdas(
    dataset,
    scores: np.ndarray,
    config: MetricConfig = MetricConfig(),
    sigma: float = 1.0,
) -> LambdaState:
    """Lambda state for every document of a dataset, group by group.

    Groups are independent; results are identical to per-group computation
    merged in dataset order.
    """
    _, y, indptr = dataset.stacked()
    lambdas = np.zeros(len(y))
    weights = np.zeros(len(y))
    for k in range(len(indptr) - 1):
        a, b = indptr[k], indptr[k + 1]
        lambdas[a:b], weights[a:b] = pair_lambdas(y[a:b], scores[a:b], config, sigma)
    return LambdaState(lambdas=lambdas, weights=weights)
