"""Shared synthetic data builders and independent oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

import rcrank as rc


def make_random_dataset(
    rng: np.random.Generator,
    n_queries: int = 20,
    docs_per_query: int = 8,
    n_features: int = 3,
    max_label: int = 5,
) -> rc.Dataset:
    """Random labels, uninformative features."""
    groups = []
    for q in range(n_queries):
        m = int(rng.integers(1, docs_per_query + 1))
        labels = rng.integers(1, max_label + 1, size=m)
        features = rng.normal(size=(m, n_features))
        groups.append(rc.QueryGroup(q, features, labels))
    return rc.Dataset(groups, n_features)


def make_separable_dataset(
    rng: np.random.Generator,
    n_queries: int = 200,
    docs_per_query: int = 20,
    n_features: int = 3,
    noise: float = 0.05,
) -> rc.Dataset:
    """Feature 0 equals the label plus small noise; the rest is noise."""
    groups = []
    for q in range(n_queries):
        labels = rng.integers(1, 6, size=docs_per_query)
        informative = labels + rng.uniform(-noise, noise, size=docs_per_query)
        features = np.column_stack(
            [informative, rng.normal(size=(docs_per_query, n_features - 1))]
        )
        groups.append(rc.QueryGroup(q, features, labels))
    return rc.Dataset(groups, n_features)


# ---------------------------------------------------------------------------
# Independent oracles (deliberately brute-force, no shared code with rcrank)
# ---------------------------------------------------------------------------


def oracle_dcg(ranked_labels, cutoff: int = 10, shift: float = 1.0) -> float:
    total = 0.0
    for position, label in enumerate(ranked_labels, start=1):
        if position <= cutoff:
            total += (2.0**label - 1.0) / math.log2(position + shift)
    return total


def oracle_best_dcg(labels, cutoff: int = 10, shift: float = 1.0) -> float:
    """Maximum DCG over all permutations (feasible for small groups)."""
    return max(
        oracle_dcg(perm, cutoff, shift) for perm in itertools.permutations(labels)
    )


def oracle_pair_lambdas(labels, scores, cutoff=10, shift=1.0, sigma=1.0):
    """Direct double loop over ordered pairs, scalar arithmetic only."""
    labels = list(labels)
    scores = list(scores)
    m = len(labels)
    order = sorted(range(m), key=lambda i: (-scores[i], i))
    position = {doc: rank + 1 for rank, doc in enumerate(order)}

    def disc(p):
        return 1.0 / math.log2(p + shift) if p <= cutoff else 0.0

    ideal = oracle_dcg(sorted(labels, reverse=True), cutoff, shift)
    lambdas = [0.0] * m
    weights = [0.0] * m
    if ideal == 0.0 or m < 2:
        return lambdas, weights
    for i in range(m):
        for j in range(m):
            if labels[i] <= labels[j]:
                continue
            dz = (
                abs((2.0 ** labels[i] - 1) - (2.0 ** labels[j] - 1))
                * abs(disc(position[i]) - disc(position[j]))
                / ideal
            )
            rho = 1.0 / (1.0 + math.exp(sigma * (scores[i] - scores[j])))
            lambdas[i] += sigma * rho * dz
            lambdas[j] -= sigma * rho * dz
            weights[i] += sigma * sigma * rho * (1.0 - rho) * dz
            weights[j] += sigma * sigma * rho * (1.0 - rho) * dz
    return lambdas, weights


def oracle_level_cost(rule, X, targets, node_sets) -> float:
    """Weighted left/right population variance, scalar arithmetic."""
    X = np.asarray(X)
    targets = np.asarray(targets, dtype=float)
    total = sum(len(s) for s in node_sets)
    acc = 0.0
    for node in node_sets:
        left = [i for i in node if X[i, rule.feature] <= rule.threshold]
        right = [i for i in node if X[i, rule.feature] > rule.threshold]
        for part in (left, right):
            if part:
                vals = targets[part]
                mean = vals.sum() / len(vals)
                acc += float(((vals - mean) ** 2).sum())
    return acc / total


class _OracleNode:
    def __init__(self, rule=None, left=None, right=None, value=None):
        self.rule = rule
        self.left = left
        self.right = right
        self.value = value


def oracle_expand_oblivious(tree) -> _OracleNode:
    """Expand an oblivious tree into an explicit node structure."""

    def build(depth: int, prefix: int) -> _OracleNode:
        if depth == len(tree.rules):
            return _OracleNode(value=float(tree.leaf_values[prefix]))
        return _OracleNode(
            rule=tree.rules[depth],
            left=build(depth + 1, prefix * 2),
            right=build(depth + 1, prefix * 2 + 1),
        )

    return build(0, 0)


def oracle_traverse(node: _OracleNode, x) -> float:
    while node.value is None:
        if float(x[node.rule.feature]) <= node.rule.threshold:
            node = node.left
        else:
            node = node.right
    return node.value


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)
