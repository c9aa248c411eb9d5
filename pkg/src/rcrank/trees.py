"""Weak learners fitted to gradient targets each boosting iteration.

Two shapes share one split-search core:

* oblivious trees: one (feature, threshold) rule per level, so every node
  at a depth tests the same predicate and the tree compiles to a decision
  table of 2^D leaf values;
* standard regression trees: grown best-first to a leaf budget, splitting
  whichever leaf offers the largest weighted-variance reduction.

Split quality for a rule over a collection of disjoint node sets is the
size-weighted sum of left/right population variances of the targets,
normalized by the collection's total size.  The search is exact over a
fixed candidate set: midpoints of consecutive distinct feature values,
capped at 256 quantile thresholds per feature on high-cardinality data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lambdas import LambdaState

MAX_BINS = 256
NEWTON_EPS = 1e-10


@dataclass(frozen=True)
class SplittingRule:
    """A (feature index, threshold) pair; left means value <= threshold."""

    feature: int
    threshold: float


class SplitCandidateSet:
    """Per-feature candidate thresholds, strictly increasing."""

    def __init__(self, thresholds: Sequence[np.ndarray]):
        self.thresholds = [np.asarray(t, dtype=np.float64) for t in thresholds]
        for f, t in enumerate(self.thresholds):
            if len(t) > 1 and not (np.diff(t) > 0).all():
                raise ValueError(f"thresholds for feature {f} are not increasing")

    @property
    def feature_count(self) -> int:
        return len(self.thresholds)

    @classmethod
    def from_data(cls, X, max_bins: int = MAX_BINS) -> "SplitCandidateSet":
        """Midpoints between consecutive distinct values per feature, replaced
        by ``max_bins`` quantile thresholds when there are more than that."""
        X = np.asarray(X)
        thresholds = []
        for f in range(X.shape[1]):
            column = X[:, f].astype(np.float64)
            distinct = np.unique(column)
            if len(distinct) < 2:
                thresholds.append(np.empty(0))
                continue
            if len(distinct) > max_bins:
                probs = np.arange(1, max_bins + 1) / (max_bins + 1)
                mids = np.unique(np.quantile(column, probs))
            else:
                mids = (distinct[:-1] + distinct[1:]) / 2.0
            thresholds.append(mids)
        return cls(thresholds)

    def bin(self, X) -> np.ndarray:
        """Bin index per (row, feature): the count of thresholds below the
        value, so ``bin <= k`` is exactly ``value <= thresholds[k]``."""
        X = np.asarray(X)
        bins = np.empty(X.shape, dtype=np.int32)
        for f in range(X.shape[1]):
            bins[:, f] = np.searchsorted(
                self.thresholds[f], X[:, f].astype(np.float64), side="left"
            )
        return bins


@dataclass(eq=False)
class ObliviousTree:
    """Level-uniform tree: rule d applies to every node at depth d.

    ``leaf_values[i]`` is addressed by packing the D predicate outcomes
    (feature value > threshold) into bits, level 0 most significant.
    """

    rules: tuple[SplittingRule, ...]
    leaf_values: np.ndarray

    def __post_init__(self) -> None:
        self.leaf_values = np.asarray(self.leaf_values, dtype=np.float64)
        if len(self.leaf_values) != 2 ** len(self.rules):
            raise ValueError(
                f"expected {2 ** len(self.rules)} leaf values, got {len(self.leaf_values)}"
            )

    @property
    def depth(self) -> int:
        return len(self.rules)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_values)

    def apply(self, X) -> np.ndarray:
        """Leaf index for each row of X."""
        X = np.asarray(X)
        idx = np.zeros(len(X), dtype=np.int64)
        for rule in self.rules:
            idx = idx * 2 + (X[:, rule.feature].astype(np.float64) > rule.threshold)
        return idx

    def traverse_score(self, x) -> float:
        """Score one vector by walking the tree level by level."""
        x = np.asarray(x)
        node = 0
        for rule in self.rules:
            if float(x[rule.feature]) <= rule.threshold:
                node = node * 2
            else:
                node = node * 2 + 1
        return float(self.leaf_values[node])

    def score_batch(self, X) -> np.ndarray:
        return self.leaf_values[self.apply(X)]

    def with_leaf_values(self, leaf_values: np.ndarray) -> "ObliviousTree":
        return ObliviousTree(self.rules, np.asarray(leaf_values, dtype=np.float64))


@dataclass(eq=False)
class RegressionTree:
    """Binary tree stored as parallel node arrays; node 0 is the root.

    ``feature[i] == -1`` marks node i as a leaf holding ``value[i]``;
    internal nodes route rows left when value <= threshold.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __post_init__(self) -> None:
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == -1))

    @property
    def rules(self) -> tuple[SplittingRule, ...]:
        return tuple(
            SplittingRule(int(f), float(t))
            for f, t in zip(self.feature, self.threshold)
            if f != -1
        )

    def apply(self, X) -> np.ndarray:
        """Leaf node id for each row of X."""
        X = np.asarray(X)
        nodes = np.zeros(len(X), dtype=np.int64)
        active = self.feature[nodes] != -1
        while active.any():
            rows = np.nonzero(active)[0]
            current = nodes[rows]
            values = X[rows, self.feature[current]].astype(np.float64)
            goes_left = values <= self.threshold[current]
            nodes[rows] = np.where(goes_left, self.left[current], self.right[current])
            active[rows] = self.feature[nodes[rows]] != -1
        return nodes

    def score_batch(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def traverse_score(self, x) -> float:
        x = np.asarray(x)
        node = 0
        while self.feature[node] != -1:
            if float(x[self.feature[node]]) <= self.threshold[node]:
                node = int(self.left[node])
            else:
                node = int(self.right[node])
        return float(self.value[node])

    def with_leaf_values(self, value: np.ndarray) -> "RegressionTree":
        return RegressionTree(
            self.feature.copy(),
            self.threshold.copy(),
            self.left.copy(),
            self.right.copy(),
            np.asarray(value, dtype=np.float64),
        )


@dataclass(eq=False)
class DecisionTable:
    """Flat form of an oblivious tree: D predicates indexing 2^D values."""

    features: np.ndarray
    thresholds: np.ndarray
    values: np.ndarray

    def score(self, x) -> float:
        x = np.asarray(x)
        index = 0
        for d in range(len(self.features)):
            bit = float(x[self.features[d]]) > self.thresholds[d]
            index = (index << 1) | int(bit)
        return float(self.values[index])

    def score_batch(self, X) -> np.ndarray:
        X = np.asarray(X)
        index = np.zeros(len(X), dtype=np.int64)
        for d in range(len(self.features)):
            bit = X[:, self.features[d]].astype(np.float64) > self.thresholds[d]
            index = (index << 1) | bit.astype(np.int64)
        return self.values[index]


def to_decision_table(tree: ObliviousTree) -> DecisionTable:
    return DecisionTable(
        features=np.array([r.feature for r in tree.rules], dtype=np.int64),
        thresholds=np.array([r.threshold for r in tree.rules], dtype=np.float64),
        values=tree.leaf_values.copy(),
    )


def split_samples(X, rule: SplittingRule, indices=None) -> tuple[np.ndarray, np.ndarray]:
    """Partition rows of X (or the given row indices) into the index arrays
    (<= threshold, > threshold)."""
    X = np.asarray(X)
    if indices is None:
        indices = np.arange(len(X), dtype=np.int64)
    else:
        indices = np.asarray(indices, dtype=np.int64)
    goes_left = X[indices, rule.feature].astype(np.float64) <= rule.threshold
    return indices[goes_left], indices[~goes_left]


def level_cost(
    rule: SplittingRule, X, targets, node_sets: Sequence[np.ndarray]
) -> float:
    """Size-weighted left/right variance of targets under ``rule``, summed
    over the node sets and normalized by their total size.

    Empty sides contribute zero; population variance throughout.
    """
    X = np.asarray(X)
    targets = np.asarray(targets, dtype=np.float64)
    total = sum(len(s) for s in node_sets)
    if total == 0:
        raise ValueError("all node sets are empty")
    acc = 0.0
    for node in node_sets:
        left, right = split_samples(X, rule, node)
        for part in (left, right):
            if len(part) > 0:
                acc += len(part) * float(np.var(targets[part]))
    return acc / total


def _div0(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    out = np.zeros_like(numerator)
    np.divide(numerator, denominator, out=out, where=denominator > 0)
    return out


def _best_binned_rule(
    bins: np.ndarray,
    candidates: SplitCandidateSet,
    targets: np.ndarray,
    node_idx: np.ndarray,
    n_nodes: int,
) -> tuple[int, int, float, float] | None:
    """Exhaustive scan via per-node histograms of (count, target sum).

    Minimizing the weighted-variance cost is equivalent to maximizing
    sum(left_sum^2/left_n + right_sum^2/right_n) over nodes, because the
    total sum of squared targets is split-invariant.  Returns
    (feature, threshold position, best score, no-split score); ties keep
    the lowest feature, then the lowest threshold.  None when no feature
    has candidates.
    """
    best: tuple[int, int, float, float] | None = None
    for f in range(candidates.feature_count):
        n_thresholds = len(candidates.thresholds[f])
        if n_thresholds == 0:
            continue
        nb = n_thresholds + 1
        combined = node_idx * nb + bins[:, f]
        counts = np.bincount(combined, minlength=n_nodes * nb).astype(np.float64)
        sums = np.bincount(combined, weights=targets, minlength=n_nodes * nb)
        counts = np.cumsum(counts.reshape(n_nodes, nb), axis=1)
        sums = np.cumsum(sums.reshape(n_nodes, nb), axis=1)
        total_count = counts[:, -1:]
        total_sum = sums[:, -1:]
        left_count, left_sum = counts[:, :-1], sums[:, :-1]
        right_count = total_count - left_count
        right_sum = total_sum - left_sum
        per_threshold = (
            _div0(left_sum**2, left_count) + _div0(right_sum**2, right_count)
        ).sum(axis=0)
        pos = int(np.argmax(per_threshold))
        score = float(per_threshold[pos])
        if best is None or score > best[2]:
            baseline = float(_div0(total_sum**2, total_count).sum())
            best = (f, pos, score, baseline)
    return best


def best_level_rule(
    X, targets, node_sets: Sequence[np.ndarray], candidates: SplitCandidateSet
) -> SplittingRule:
    """The rule minimizing :func:`level_cost` over every candidate.

    Ties break to the lowest feature index, then the lowest threshold.  The
    returned rule may be degenerate (one empty side) when nothing reduces
    variance.
    """
    X = np.asarray(X)
    targets = np.asarray(targets, dtype=np.float64)
    rows = np.concatenate([np.asarray(s, dtype=np.int64) for s in node_sets])
    if len(rows) == 0:
        raise ValueError("all node sets are empty")
    node_idx = np.concatenate(
        [np.full(len(s), k, dtype=np.int64) for k, s in enumerate(node_sets)]
    )
    bins = candidates.bin(X[rows])
    found = _best_binned_rule(bins, candidates, targets[rows], node_idx, len(node_sets))
    if found is None:
        raise ValueError("no candidate thresholds for any feature")
    f, pos, _, _ = found
    return SplittingRule(feature=f, threshold=float(candidates.thresholds[f][pos]))


def _leaf_means(leaf_idx: np.ndarray, targets: np.ndarray, n_leaves: int) -> np.ndarray:
    counts = np.bincount(leaf_idx, minlength=n_leaves).astype(np.float64)
    sums = np.bincount(leaf_idx, weights=targets, minlength=n_leaves)
    return _div0(sums, counts)


def build_oblivious_tree(
    X,
    targets,
    depth: int,
    candidates: SplitCandidateSet,
    bins: np.ndarray | None = None,
) -> ObliviousTree:
    """Greedy top-down induction: each level picks the single rule splitting
    all current nodes best, then every node is split by it.  Leaf values are
    target means; empty leaves get 0.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    X = np.asarray(X)
    if len(X) == 0:
        raise ValueError("no samples")
    targets = np.asarray(targets, dtype=np.float64)
    if bins is None:
        bins = candidates.bin(X)
    node_idx = np.zeros(len(X), dtype=np.int64)
    rules = []
    for d in range(depth):
        found = _best_binned_rule(bins, candidates, targets, node_idx, 2**d)
        if found is None:
            raise ValueError("no candidate thresholds for any feature")
        f, pos, _, _ = found
        rules.append(SplittingRule(f, float(candidates.thresholds[f][pos])))
        node_idx = node_idx * 2 + (bins[:, f] > pos)
    return ObliviousTree(tuple(rules), _leaf_means(node_idx, targets, 2**depth))


def build_regression_tree(
    X,
    targets,
    max_leaves: int,
    candidates: SplitCandidateSet,
    bins: np.ndarray | None = None,
) -> RegressionTree:
    """Best-first growth: always split the leaf whose best split removes the
    most weighted variance, stopping at the leaf budget or when no split
    improves.  Leaf values are target means.
    """
    if max_leaves < 2:
        raise ValueError(f"max_leaves must be >= 2, got {max_leaves}")
    X = np.asarray(X)
    if len(X) == 0:
        raise ValueError("no samples")
    targets = np.asarray(targets, dtype=np.float64)
    if bins is None:
        bins = candidates.bin(X)

    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [float(targets.mean())]
    leaf_rows: dict[int, np.ndarray] = {0: np.arange(len(X), dtype=np.int64)}

    def propose(node: int) -> tuple[float, int, int] | None:
        rows = leaf_rows[node]
        found = _best_binned_rule(
            bins[rows], candidates, targets[rows], np.zeros(len(rows), dtype=np.int64), 1
        )
        if found is None:
            return None
        f, pos, score, baseline = found
        gain = score - baseline
        return (gain, f, pos) if gain > 0.0 else None

    pending = {0: propose(0)}
    n_leaves = 1
    while n_leaves < max_leaves:
        node_id = -1
        best_gain = 0.0
        for leaf_id in sorted(pending):
            candidate = pending[leaf_id]
            if candidate is not None and candidate[0] > best_gain:
                best_gain, node_id = candidate[0], leaf_id
        if node_id == -1:
            break
        _, f, pos = pending.pop(node_id)
        rows = leaf_rows.pop(node_id)
        goes_left = bins[rows, f] <= pos
        left_id, right_id = len(feature), len(feature) + 1
        for child_rows in (rows[goes_left], rows[~goes_left]):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(targets[child_rows].mean()) if len(child_rows) else 0.0)
        leaf_rows[left_id] = rows[goes_left]
        leaf_rows[right_id] = rows[~goes_left]
        feature[node_id] = f
        threshold[node_id] = float(candidates.thresholds[f][pos])
        left[node_id] = left_id
        right[node_id] = right_id
        value[node_id] = 0.0
        pending[left_id] = propose(left_id)
        pending[right_id] = propose(right_id)
        n_leaves += 1
    return RegressionTree(feature, threshold, left, right, value)


def newton_adjust(tree, leaf_assignment, state: LambdaState):
    """Replace each leaf value by sum(lambda) / (sum(weight) + eps) over the
    training documents routed to it; leaves with no documents keep 0.
    """
    leaf_assignment = np.asarray(leaf_assignment, dtype=np.int64)
    if isinstance(tree, ObliviousTree):
        size = tree.n_leaves
    else:
        size = tree.n_nodes
    counts = np.bincount(leaf_assignment, minlength=size)
    lambda_sums = np.bincount(leaf_assignment, weights=state.lambdas, minlength=size)
    weight_sums = np.bincount(leaf_assignment, weights=state.weights, minlength=size)
    values = np.where(counts > 0, lambda_sums / (weight_sums + NEWTON_EPS), 0.0)
    if isinstance(tree, ObliviousTree):
        return tree.with_leaf_values(values)
    new_values = tree.value.copy()
    leaves = tree.feature == -1
    new_values[leaves] = values[leaves]
    return tree.with_leaf_values(new_values)
