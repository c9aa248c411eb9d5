"""Input checks shared by the estimator and array-based entry points."""

from __future__ import annotations

import numpy as np


def check_feature_matrix(X, feature_count: int | None = None) -> np.ndarray:
    """Validate a 2-D finite feature matrix, optionally of fixed width."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    if X.size and not np.isfinite(X.astype(np.float64)).all():
        raise ValueError("X contains NaN or infinite values")
    if feature_count is not None and X.shape[1] != feature_count:
        raise ValueError(f"X has {X.shape[1]} features, expected {feature_count}")
    return X


def check_labels(y, n_rows: int) -> np.ndarray:
    """Validate integer relevance labels aligned with the rows of X."""
    y = np.asarray(y)
    if y.shape != (n_rows,):
        raise ValueError(f"y must have shape ({n_rows},), got {y.shape}")
    as_int = y.astype(np.int64)
    if not np.array_equal(as_int, y.astype(np.float64)):
        raise ValueError("labels must be integral relevance grades")
    return as_int


def check_qid(qid, n_rows: int) -> np.ndarray:
    """Validate per-row query identifiers."""
    qid = np.asarray(qid)
    if qid.shape != (n_rows,):
        raise ValueError(f"qid must have shape ({n_rows},), got {qid.shape}")
    qid = qid.astype(np.int64)
    if (qid < 0).any():
        raise ValueError("query ids must be non-negative")
    return qid
