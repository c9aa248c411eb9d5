"""Versioned text format for tree ensembles, plus the scoring entry points.

Oblivious ensembles score through compiled decision tables; standard
ensembles walk their nodes.  Real values are written with shortest
round-trip precision, so save -> load -> save is byte-identical and a
reloaded model scores bit-exactly like the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .metrics import MetricConfig, parse_metric
from .trees import DecisionTable, ObliviousTree, RegressionTree, to_decision_table

MAGIC = "RCRANK-MODEL"
FORMAT_VERSION = 1

VARIANT_OBLIVIOUS = "oblivious"
VARIANT_STANDARD = "standard"


class ModelFormatError(ValueError):
    """Raised when a model file does not match the declared format."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(eq=False)
class Ensemble:
    """An ordered, homogeneous sequence of weighted trees."""

    variant: str
    feature_count: int
    metric: MetricConfig
    weights: list[float] = field(default_factory=list)
    trees: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.variant not in (VARIANT_OBLIVIOUS, VARIANT_STANDARD):
            raise ValueError(f"unknown variant {self.variant!r}")
        if len(self.weights) != len(self.trees):
            raise ValueError("one weight per tree required")
        expected = ObliviousTree if self.variant == VARIANT_OBLIVIOUS else RegressionTree
        for tree in self.trees:
            if not isinstance(tree, expected):
                raise ValueError(f"{self.variant} ensemble holds a {type(tree).__name__}")
            for rule in tree.rules:
                if rule.feature >= self.feature_count:
                    raise ValueError(
                        f"rule references feature {rule.feature} "
                        f">= feature_count {self.feature_count}"
                    )
        self._tables: list[DecisionTable] | None = None

    def __len__(self) -> int:
        return len(self.trees)

    def truncated(self, n_trees: int) -> "Ensemble":
        return Ensemble(
            self.variant,
            self.feature_count,
            self.metric,
            list(self.weights[:n_trees]),
            list(self.trees[:n_trees]),
        )

    def _decision_tables(self) -> list[DecisionTable]:
        if self._tables is None:
            self._tables = [to_decision_table(t) for t in self.trees]
        return self._tables

    def score_matrix(self, X) -> np.ndarray:
        """Scores for every row of X; decision tables for oblivious trees."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ValueError(
                f"expected shape (n, {self.feature_count}), got {X.shape}"
            )
        scores = np.zeros(len(X))
        if self.variant == VARIANT_OBLIVIOUS:
            for weight, table in zip(self.weights, self._decision_tables()):
                scores += weight * table.score_batch(X)
        else:
            for weight, tree in zip(self.weights, self.trees):
                scores += weight * tree.score_batch(X)
        return scores


def score(ensemble: Ensemble, vector) -> float:
    """Score a single feature vector."""
    vector = np.asarray(vector)
    if vector.shape != (ensemble.feature_count,):
        raise ValueError(
            f"expected vector of length {ensemble.feature_count}, got {vector.shape}"
        )
    total = 0.0
    if ensemble.variant == VARIANT_OBLIVIOUS:
        for weight, table in zip(ensemble.weights, ensemble._decision_tables()):
            total += weight * table.score(vector)
    else:
        for weight, tree in zip(ensemble.weights, ensemble.trees):
            total += weight * tree.traverse_score(vector)
    return total


def _format_lines(ensemble: Ensemble) -> Iterable[str]:
    yield f"{MAGIC} {FORMAT_VERSION}"
    yield f"variant {ensemble.variant}"
    yield f"features {ensemble.feature_count}"
    yield f"metric {ensemble.metric.name}"
    yield f"trees {len(ensemble.trees)}"
    for t, (weight, tree) in enumerate(zip(ensemble.weights, ensemble.trees)):
        if isinstance(tree, ObliviousTree):
            yield f"tree {t} weight {float(weight)!r} depth {tree.depth}"
            for level, rule in enumerate(tree.rules):
                yield f"rule {level} {rule.feature} {float(rule.threshold)!r}"
            yield "leaves " + " ".join(f"{float(v)!r}" for v in tree.leaf_values)
        else:
            yield f"tree {t} weight {float(weight)!r} nodes {tree.n_nodes}"
            for i in range(tree.n_nodes):
                if tree.feature[i] == -1:
                    yield f"node {i} leaf {float(tree.value[i])!r}"
                else:
                    yield (
                        f"node {i} split {tree.feature[i]} "
                        f"{float(tree.threshold[i])!r} {tree.left[i]} {tree.right[i]}"
                    )


def save_model(ensemble: Ensemble, sink) -> None:
    """Write the ensemble to a path or text file object, deterministically."""
    if hasattr(sink, "write"):
        for line in _format_lines(ensemble):
            sink.write(line + "\n")
        return
    with open(sink, "w", encoding="utf-8", newline="\n") as handle:
        for line in _format_lines(ensemble):
            handle.write(line + "\n")


class _Reader:
    def __init__(self, lines: list[str]):
        self.lines = lines
        self.pos = 0

    @property
    def line_number(self) -> int:
        return self.pos + 1

    def next(self, section: str) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise ModelFormatError(
            f"unexpected end of file, expected {section}", len(self.lines) + 1
        )

    def expect(self, keyword: str) -> list[str]:
        number = self.line_number
        line = self.next(f"'{keyword}' line")
        parts = line.split()
        if parts[0] != keyword:
            raise ModelFormatError(
                f"expected '{keyword}' line, got {line!r}", number
            )
        return parts


def _parse_int(token: str, what: str, line_number: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ModelFormatError(f"bad {what} {token!r}", line_number) from None


def _parse_float(token: str, what: str, line_number: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ModelFormatError(f"bad {what} {token!r}", line_number) from None


def _read_oblivious(reader: _Reader, header: list[str], index: int) -> ObliviousTree:
    from .trees import SplittingRule

    number = reader.line_number - 1
    if len(header) != 6 or header[4] != "depth":
        raise ModelFormatError("malformed oblivious tree header", number)
    depth = _parse_int(header[5], "depth", number)
    rules = []
    for level in range(depth):
        number = reader.line_number
        parts = reader.expect("rule")
        if len(parts) != 4:
            raise ModelFormatError("malformed rule line", number)
        if _parse_int(parts[1], "rule level", number) != level:
            raise ModelFormatError(f"expected rule level {level}", number)
        rules.append(
            SplittingRule(
                feature=_parse_int(parts[2], "feature", number),
                threshold=_parse_float(parts[3], "threshold", number),
            )
        )
    number = reader.line_number
    parts = reader.expect("leaves")
    values = [_parse_float(v, "leaf value", number) for v in parts[1:]]
    if len(values) != 2**depth:
        raise ModelFormatError(
            f"tree {index}: expected {2 ** depth} leaf values for depth {depth}, "
            f"got {len(values)}",
            number,
        )
    return ObliviousTree(tuple(rules), np.array(values))


def _read_standard(reader: _Reader, header: list[str], index: int) -> RegressionTree:
    number = reader.line_number - 1
    if len(header) != 6 or header[4] != "nodes":
        raise ModelFormatError("malformed standard tree header", number)
    n_nodes = _parse_int(header[5], "node count", number)
    if n_nodes < 1:
        raise ModelFormatError(f"tree {index}: node count must be >= 1", number)
    feature = np.full(n_nodes, -1, dtype=np.int64)
    threshold = np.zeros(n_nodes)
    left = np.full(n_nodes, -1, dtype=np.int64)
    right = np.full(n_nodes, -1, dtype=np.int64)
    value = np.zeros(n_nodes)
    for i in range(n_nodes):
        number = reader.line_number
        parts = reader.expect("node")
        if _parse_int(parts[1], "node id", number) != i:
            raise ModelFormatError(f"expected node id {i}", number)
        kind = parts[2] if len(parts) > 2 else ""
        if kind == "leaf" and len(parts) == 4:
            value[i] = _parse_float(parts[3], "leaf value", number)
        elif kind == "split" and len(parts) == 7:
            feature[i] = _parse_int(parts[3], "feature", number)
            threshold[i] = _parse_float(parts[4], "threshold", number)
            left[i] = _parse_int(parts[5], "left id", number)
            right[i] = _parse_int(parts[6], "right id", number)
            for child in (left[i], right[i]):
                if not 0 <= child < n_nodes:
                    raise ModelFormatError(f"child id {child} out of range", number)
                if child <= i:  # forward-only links keep traversal acyclic
                    raise ModelFormatError(
                        f"child id {child} must be greater than node {i}", number
                    )
        else:
            raise ModelFormatError("malformed node line", number)
    return RegressionTree(feature, threshold, left, right, value)


def load_model(source) -> Ensemble:
    """Read an ensemble written by :func:`save_model` from a path or file."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    reader = _Reader(lines)

    number = reader.line_number
    head = reader.next("magic header").split()
    if len(head) != 2 or head[0] != MAGIC:
        raise ModelFormatError(f"bad magic header, expected '{MAGIC} 1'", number)
    if _parse_int(head[1], "format version", number) != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {head[1]}", number)

    number = reader.line_number
    parts = reader.expect("variant")
    if len(parts) != 2 or parts[1] not in (VARIANT_OBLIVIOUS, VARIANT_STANDARD):
        raise ModelFormatError("variant must be 'oblivious' or 'standard'", number)
    variant = parts[1]

    number = reader.line_number
    parts = reader.expect("features")
    feature_count = _parse_int(parts[1], "feature count", number)

    number = reader.line_number
    parts = reader.expect("metric")
    try:
        metric = parse_metric(parts[1])
    except ValueError as err:
        raise ModelFormatError(str(err), number) from None

    number = reader.line_number
    parts = reader.expect("trees")
    n_trees = _parse_int(parts[1], "tree count", number)

    weights: list[float] = []
    trees: list = []
    for t in range(n_trees):
        number = reader.line_number
        header = reader.expect("tree")
        if len(header) != 6 or header[2] != "weight":
            raise ModelFormatError("malformed tree header", number)
        if _parse_int(header[1], "tree index", number) != t:
            raise ModelFormatError(f"expected tree {t}", number)
        weights.append(_parse_float(header[3], "weight", number))
        if variant == VARIANT_OBLIVIOUS:
            trees.append(_read_oblivious(reader, header, t))
        else:
            trees.append(_read_standard(reader, header, t))

    while reader.pos < len(lines):
        if lines[reader.pos].strip():
            raise ModelFormatError("unexpected trailing content", reader.line_number)
        reader.pos += 1

    try:
        return Ensemble(variant, feature_count, metric, weights, trees)
    except ValueError as err:
        raise ModelFormatError(str(err)) from None
