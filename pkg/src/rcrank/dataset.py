"""LibSVM/SVMlight ranking data: parsing, query grouping, folds, subsampling.

One line per query-document pair::

    <label> qid:<qid> <idx>:<val> ... [# comment]

Feature indices are 1-based and strictly increasing within a line; absent
indices are zero-filled.  Labels are shifted on load so the dataset minimum
becomes 1.  Queries are atomic: folds and subsamples never split a group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

FEATURE_DTYPE = np.float32


class DatasetFormatError(ValueError):
    """Raised for malformed LibSVM input; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class Document:
    """One judged query-document pair."""

    features: np.ndarray
    label: int
    original_index: int


class QueryGroup:
    """All documents judged for one query, in file order."""

    __slots__ = ("query_id", "features", "labels")

    def __init__(self, query_id: int, features: np.ndarray, labels: np.ndarray):
        if len(labels) == 0:
            raise ValueError(f"query {query_id} has no documents")
        self.query_id = int(query_id)
        self.features = np.asarray(features, dtype=FEATURE_DTYPE)
        self.labels = np.asarray(labels, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def documents(self) -> tuple[Document, ...]:
        return tuple(
            Document(features=self.features[i], label=int(self.labels[i]), original_index=i)
            for i in range(len(self))
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QueryGroup)
            and self.query_id == other.query_id
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )

    def __repr__(self) -> str:
        return f"QueryGroup(query_id={self.query_id}, documents={len(self)})"


class Dataset:
    """An ordered collection of query groups with a fixed feature count."""

    def __init__(self, groups: Sequence[QueryGroup], feature_count: int):
        if not groups:
            raise ValueError("dataset has no query groups")
        qids = [g.query_id for g in groups]
        if len(set(qids)) != len(qids):
            raise ValueError("duplicate query_id across groups")
        self.groups = list(groups)
        self.feature_count = int(feature_count)
        all_labels = np.concatenate([g.labels for g in groups])
        self.label_range = (int(all_labels.min()), int(all_labels.max()))
        self._stacked: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    @property
    def total_documents(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def query_ids(self) -> list[int]:
        return [g.query_id for g in self.groups]

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Feature matrix, labels and group index pointers, concatenated.

        ``indptr`` has one more entry than there are groups; group i owns
        rows indptr[i]:indptr[i+1].  Cached after the first call.
        """
        if self._stacked is None:
            X = np.concatenate([g.features for g in self.groups], axis=0)
            y = np.concatenate([g.labels for g in self.groups])
            sizes = np.array([len(g) for g in self.groups])
            indptr = np.concatenate([[0], np.cumsum(sizes)])
            self._stacked = (X, y, indptr)
        return self._stacked

    def restrict_queries(self, query_ids: Iterable[int]) -> "Dataset":
        """Dataset with only the given queries, keeping this dataset's order."""
        wanted = set(query_ids)
        kept = [g for g in self.groups if g.query_id in wanted]
        return Dataset(kept, self.feature_count)

    def restrict_features(self, feature_indices: Sequence[int]) -> "Dataset":
        """Dataset with feature columns reduced to ``feature_indices``, in order."""
        idx = list(feature_indices)
        groups = [
            QueryGroup(g.query_id, g.features[:, idx], g.labels) for g in self.groups
        ]
        return Dataset(groups, len(idx))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.feature_count == other.feature_count
            and self.groups == other.groups
        )

    def __repr__(self) -> str:
        return (
            f"Dataset(queries={len(self.groups)}, documents={self.total_documents}, "
            f"features={self.feature_count})"
        )


@dataclass(frozen=True)
class FoldSplit:
    """Query-wise partition of a dataset into train/valid/test for one fold."""

    fold_index: int
    train: frozenset[int]
    valid: frozenset[int]
    test: frozenset[int]


@dataclass(frozen=True)
class DatasetStats:
    queries: int
    rows: int
    mean_docs: float
    median_docs: int
    max_docs: int
    min_docs: int
    features: int


def parse_line(
    text: str, feature_count: int, line_number: int | None = None
) -> tuple[int, int, np.ndarray]:
    """Parse one LibSVM line into (label, query_id, dense feature vector).

    Indices absent from the line are filled with 0.0; a trailing
    ``# comment`` is ignored.  Raises :class:`DatasetFormatError` on
    malformed tokens, indices beyond ``feature_count`` or indices that are
    not strictly increasing.
    """
    body = text.split("#", 1)[0].strip()
    tokens = body.split()
    if len(tokens) < 2:
        raise DatasetFormatError("expected '<label> qid:<id> ...'", line_number)
    try:
        label = int(tokens[0])
    except ValueError:
        raise DatasetFormatError(f"bad label {tokens[0]!r}", line_number) from None
    if not tokens[1].startswith("qid:"):
        raise DatasetFormatError(f"expected qid token, got {tokens[1]!r}", line_number)
    try:
        query_id = int(tokens[1][4:])
    except ValueError:
        raise DatasetFormatError(f"bad qid {tokens[1]!r}", line_number) from None

    features = np.zeros(feature_count, dtype=FEATURE_DTYPE)
    previous = 0
    for token in tokens[2:]:
        idx_s, sep, val_s = token.partition(":")
        if not sep:
            raise DatasetFormatError(f"bad feature token {token!r}", line_number)
        try:
            idx = int(idx_s)
            value = float(val_s)
        except ValueError:
            raise DatasetFormatError(f"bad feature token {token!r}", line_number) from None
        if idx < 1 or idx > feature_count:
            raise DatasetFormatError(
                f"feature index {idx} outside 1..{feature_count}", line_number
            )
        if idx == previous:
            raise DatasetFormatError(f"duplicate feature index {idx}", line_number)
        if idx < previous:
            raise DatasetFormatError(
                f"feature indices not strictly increasing at {idx}", line_number
            )
        features[idx - 1] = value
        previous = idx
    return label, query_id, features


def _scan_feature_count(lines: Sequence[str]) -> int:
    """Max 1-based feature index across all lines (for inference)."""
    best = 0
    for number, text in enumerate(lines, start=1):
        body = text.split("#", 1)[0].strip()
        if not body:
            continue
        for token in body.split()[2:]:
            idx_s, sep, _ = token.partition(":")
            if not sep:
                raise DatasetFormatError(f"bad feature token {token!r}", number)
            try:
                idx = int(idx_s)
            except ValueError:
                raise DatasetFormatError(f"bad feature token {token!r}", number) from None
            if idx > best:
                best = idx
    return best


def align_labels(labels: np.ndarray) -> np.ndarray:
    """Shift labels by a constant so the minimum grade becomes 1."""
    return labels + (1 - int(labels.min()))


def dataset_from_rows(
    rows: Iterable[tuple[int, int, np.ndarray]],
    feature_count: int,
    align: bool = True,
) -> Dataset:
    """Group (label, qid, vector) rows into a Dataset, qids ordered by
    first appearance and file order kept within each group."""
    by_qid: dict[int, tuple[list[int], list[np.ndarray]]] = {}
    for label, qid, vector in rows:
        if qid not in by_qid:
            by_qid[qid] = ([], [])
        labels, vectors = by_qid[qid]
        labels.append(label)
        vectors.append(vector)
    if not by_qid:
        raise DatasetFormatError("no data rows found")
    groups = []
    for qid, (labels, vectors) in by_qid.items():
        y = np.asarray(labels, dtype=np.int64)
        groups.append(QueryGroup(qid, np.vstack(vectors), y))
    if align:
        shift = 1 - min(int(g.labels.min()) for g in groups)
        if shift != 0:
            groups = [
                QueryGroup(g.query_id, g.features, g.labels + shift) for g in groups
            ]
    return Dataset(groups, feature_count)


def load_dataset(path, feature_count: int | None = None) -> Dataset:
    """Load a LibSVM ranking file, grouping rows by qid and aligning labels.

    When ``feature_count`` is omitted it is inferred as the largest feature
    index present in the file.
    """
    with open(path, "r", encoding="utf-8", newline=None) as handle:
        lines = handle.readlines()
    if feature_count is None:
        feature_count = _scan_feature_count(lines)
        if feature_count == 0:
            raise DatasetFormatError(f"cannot infer feature count from {path}")

    def rows() -> Iterator[tuple[int, int, np.ndarray]]:
        for number, text in enumerate(lines, start=1):
            if not text.split("#", 1)[0].strip():
                continue
            yield parse_line(text, feature_count, line_number=number)

    try:
        return dataset_from_rows(rows(), feature_count)
    except DatasetFormatError as err:
        if err.line_number is None:
            raise DatasetFormatError(f"{path} is empty") from err
        raise


def from_arrays(X, y, qid) -> Dataset:
    """Build a Dataset from flat (X, y, qid) arrays, aligning labels.

    Rows of one qid need not be contiguous; groups are ordered by first
    appearance and row order is kept within each group.
    """
    from .validation import check_labels, check_qid

    X = np.asarray(X, dtype=FEATURE_DTYPE)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    y = check_labels(y, len(X))
    qid = check_qid(qid, len(X))
    rows = ((int(y[i]), int(qid[i]), X[i]) for i in range(len(X)))
    return dataset_from_rows(rows, X.shape[1])


def to_libsvm_lines(dataset: Dataset) -> Iterator[str]:
    """Serialize a dataset back to dense LibSVM lines (round-trip exact)."""
    for group in dataset.groups:
        for i in range(len(group)):
            values = " ".join(
                f"{j + 1}:{float(v)!r}" for j, v in enumerate(group.features[i])
            )
            yield f"{int(group.labels[i])} qid:{group.query_id} {values}"


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in to_libsvm_lines(dataset):
            handle.write(line + "\n")


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Summary counts; mean to 2 decimals, median is the lower middle."""
    sizes = sorted(len(g) for g in dataset.groups)
    n = len(sizes)
    rows = sum(sizes)
    median = sizes[(n - 1) // 2]
    return DatasetStats(
        queries=n,
        rows=rows,
        mean_docs=round(rows / n, 2),
        median_docs=median,
        max_docs=sizes[-1],
        min_docs=sizes[0],
        features=dataset.feature_count,
    )


def split_folds(dataset: Dataset, n_folds: int = 5, seed: int = 42) -> list[FoldSplit]:
    """Query-wise rotation folds: one seeded shuffle into near-equal buckets,
    fold k training on buckets k..k+n-3 with the next two as valid and test.

    For 5 folds this yields the 60/20/20 query proportions.
    """
    if n_folds < 2:
        raise ValueError(f"n_folds must be >= 2, got {n_folds}")
    qids = np.array(dataset.query_ids)
    if len(qids) < n_folds:
        raise ValueError(f"need at least {n_folds} queries, got {len(qids)}")
    rng = np.random.default_rng(seed)
    shuffled = qids[rng.permutation(len(qids))]
    buckets = np.array_split(shuffled, n_folds)
    folds = []
    for k in range(n_folds):
        train: set[int] = set()
        for offset in range(n_folds - 2):
            train.update(int(q) for q in buckets[(k + offset) % n_folds])
        valid = frozenset(int(q) for q in buckets[(k + n_folds - 2) % n_folds])
        test = frozenset(int(q) for q in buckets[(k + n_folds - 1) % n_folds])
        folds.append(
            FoldSplit(fold_index=k, train=frozenset(train), valid=valid, test=test)
        )
    return folds


def subsample(dataset: Dataset, target_fraction: float, seed: int = 42) -> Dataset:
    """Seeded query-wise subsample reaching at least the target row share.

    Whole groups are drawn in shuffled order until the cumulative document
    count first reaches ``target_fraction`` of this dataset's rows.  When the
    target is below every group size, the single smallest group is returned.
    """
    if not 0 < target_fraction <= 1:
        raise ValueError(f"target_fraction must be in (0, 1], got {target_fraction}")
    target = target_fraction * dataset.total_documents
    sizes = [len(g) for g in dataset.groups]
    if min(sizes) >= target:
        smallest = min(range(len(sizes)), key=lambda i: sizes[i])
        return Dataset([dataset.groups[smallest]], dataset.feature_count)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset.groups))
    kept = []
    count = 0
    for i in order:
        kept.append(dataset.groups[i])
        count += sizes[i]
        if count >= target:
            break
    return Dataset(kept, dataset.feature_count)
