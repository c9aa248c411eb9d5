"""Cross-validated comparison harness: fold runs, hyperparameter grids,
training-set downsampling, feature-occurrence analysis and significance.

A grid cell is one (variant, leaves, learning rate) setting evaluated over
all folds; per-query test NDCG values are pooled across folds so paired
significance tests have per-query power.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .boosting import TrainConfig, train
from .dataset import Dataset, split_folds
from .metrics import ndcg_at_k
from .model_io import Ensemble

SIGNIFICANCE_TEST_NAME = "two-tailed paired t-test"


@dataclass
class GridCell:
    """Cross-validation outcome of one hyperparameter setting."""

    variant: str
    leaves: int
    learning_rate: float
    fold_scores: list[float] = field(default_factory=list)
    tree_counts: list[int] = field(default_factory=list)
    per_query: np.ndarray | None = None
    error: str | None = None

    @property
    def mean(self) -> float:
        if not self.fold_scores:
            return float("nan")
        return float(np.mean(self.fold_scores))

    @property
    def label(self) -> str:
        return f"{self.variant[:3]}/{self.leaves}/{self.learning_rate:g}"


@dataclass
class FeatureUsage:
    """Occurrence count of each feature across all rules of a model set."""

    counts: dict[int, int]
    feature_count: int

    @classmethod
    def from_models(cls, models: Iterable[Ensemble]) -> "FeatureUsage":
        models = list(models)
        if not models:
            raise ValueError("at least one model required")
        counts: dict[int, int] = {}
        for model in models:
            for tree in model.trees:
                for rule in tree.rules:
                    counts[rule.feature] = counts.get(rule.feature, 0) + 1
        return cls(counts=counts, feature_count=max(m.feature_count for m in models))

    def top(self, k: int) -> list[int]:
        """The k most used feature indices; ties go to the lower index."""
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
        ranked = sorted(
            range(self.feature_count), key=lambda f: (-self.counts.get(f, 0), f)
        )
        return ranked[:k]


def run_cv(
    data: Dataset,
    config: TrainConfig,
    n_folds: int = 5,
    progress: bool = False,
) -> GridCell:
    """Train and evaluate one setting over rotation folds.

    Each fold trains on its 60% of queries, truncates the forest on its
    validation 20% and reports mean NDCG on its test 20%.  Per-query test
    values are pooled in fold order for significance testing.
    """
    folds = split_folds(data, n_folds=n_folds, seed=config.seed)
    cell = GridCell(
        variant=config.tree_variant,
        leaves=config.leaves,
        learning_rate=config.learning_rate,
    )
    per_query: list[float] = []
    for fold in folds:
        try:
            train_data = data.restrict_queries(fold.train)
            valid_data = data.restrict_queries(fold.valid)
            test_data = data.restrict_queries(fold.test)
            ensemble, _ = train(train_data, valid_data, config, progress=progress)
            scores = ensemble.score_matrix(test_data.stacked()[0])
            values = []
            offset = 0
            for group in test_data.groups:
                values.append(
                    ndcg_at_k(
                        group.labels,
                        scores[offset : offset + len(group)],
                        config.metric,
                    )
                )
                offset += len(group)
            cell.fold_scores.append(float(np.mean(values)))
            cell.tree_counts.append(len(ensemble))
            per_query.extend(values)
        except Exception as err:
            raise RuntimeError(f"fold {fold.fold_index} failed: {err}") from err
    cell.per_query = np.array(per_query)
    return cell


def run_grid(
    data: Dataset,
    variant: str,
    leaves_list: Sequence[int],
    lr_list: Sequence[float],
    base_config: TrainConfig | None = None,
    n_folds: int = 5,
    progress: bool = False,
) -> list[GridCell]:
    """One :func:`run_cv` per (leaves, learning rate) pair.

    A failing cell is recorded with its error and the remaining cells still
    run.
    """
    if not leaves_list or not lr_list:
        raise ValueError("leaves_list and lr_list must be non-empty")
    base = base_config if base_config is not None else TrainConfig()
    cells = []
    for leaves in leaves_list:
        for lr in lr_list:
            try:
                config = replace(
                    base, tree_variant=variant, leaves=leaves, learning_rate=lr
                )
                cells.append(run_cv(data, config, n_folds=n_folds, progress=progress))
            except Exception as err:
                print(
                    f"grid cell variant={variant} leaves={leaves} lr={lr} failed: {err}",
                    file=sys.stderr,
                )
                cells.append(
                    GridCell(
                        variant=variant,
                        leaves=leaves,
                        learning_rate=lr,
                        error=str(err),
                    )
                )
    return cells


def feature_usage(models: Iterable[Ensemble]) -> FeatureUsage:
    """Count every rule occurrence per feature across the given models."""
    return FeatureUsage.from_models(models)


def select_top_features(
    data: Dataset, usage: FeatureUsage, k: int = 50
) -> tuple[Dataset, dict[int, int]]:
    """Keep only the k most used features, densely re-indexed.

    Kept columns stay in ascending original order; the returned mapping is
    old index -> new index.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > data.feature_count:
        raise ValueError(f"k={k} exceeds feature count {data.feature_count}")
    kept = sorted(usage.top(k))
    mapping = {old: new for new, old in enumerate(kept)}
    return data.restrict_features(kept), mapping


def paired_significance(a, b) -> float:
    """Two-tailed paired t-test p-value on per-query metric differences."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must match in length: {a.shape} vs {b.shape}")
    if len(a) < 2:
        raise ValueError("need at least two paired observations")
    diff = a - b
    if not diff.any():
        return 1.0
    sd = float(np.std(diff, ddof=1))
    if sd == 0.0:
        return 0.0
    t = float(diff.mean()) / (sd / np.sqrt(len(diff)))
    return float(2.0 * stats.t.sf(abs(t), len(diff) - 1))


def improvement_percent(score_a: float, score_b: float) -> float:
    """Relative improvement of A over B: 100 * (A - B) / B."""
    return 100.0 * (score_a - score_b) / score_b


def write_results_csv(cells: Sequence[GridCell], path) -> None:
    """One record per (variant, leaves, lr, fold): test NDCG and tree count."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("variant,leaves,learning_rate,fold,test_ndcg,trees\n")
        for cell in cells:
            for fold, (ndcg, n_trees) in enumerate(
                zip(cell.fold_scores, cell.tree_counts)
            ):
                handle.write(
                    f"{cell.variant},{cell.leaves},{cell.learning_rate!r},"
                    f"{fold},{ndcg!r},{n_trees}\n"
                )


def format_grid_report(cells: Sequence[GridCell], metric_name: str = "ndcg@10") -> str:
    """Aligned text table (leaves rows x learning-rate columns, one column
    block per variant) followed by best-cell comparison and a pairwise
    significance matrix over per-query values."""
    ok = [c for c in cells if c.error is None and c.fold_scores]
    variants = sorted({c.variant for c in ok})
    leaves_values = sorted({c.leaves for c in ok})
    lr_values = sorted({c.learning_rate for c in ok})
    by_key = {(c.variant, c.leaves, c.learning_rate): c for c in ok}

    lines = [f"mean test {metric_name} by leaves x learning rate"]
    header = ["leaves".ljust(8)]
    for lr in lr_values:
        for variant in variants:
            header.append(f"{variant[:3]}@{lr:g}".rjust(12))
    lines.append("".join(header))
    for leaves in leaves_values:
        row = [str(leaves).ljust(8)]
        for lr in lr_values:
            for variant in variants:
                cell = by_key.get((variant, leaves, lr))
                row.append(
                    f"{cell.mean:.4f}".rjust(12) if cell is not None else "-".rjust(12)
                )
        lines.append("".join(row))

    failed = [c for c in cells if c.error is not None]
    for cell in failed:
        lines.append(f"failed: {cell.label}: {cell.error}")

    if len(variants) == 2 and ok:
        best = {
            v: max((c for c in ok if c.variant == v), key=lambda c: c.mean)
            for v in variants
        }
        a, b = best[variants[0]], best[variants[1]]
        lines.append(
            f"best {a.variant}: {a.mean:.4f} ({a.label})  "
            f"best {b.variant}: {b.mean:.4f} ({b.label})  "
            f"improvement: {improvement_percent(a.mean, b.mean):+.2f}% "
            f"(100*(A-B)/B, A={a.variant})"
        )

    with_queries = [c for c in ok if c.per_query is not None and len(c.per_query) >= 2]
    if len(with_queries) >= 2:
        lines.append(f"{SIGNIFICANCE_TEST_NAME} p-values (per-query, pooled over test folds)")
        width = max(len(c.label) for c in with_queries) + 2
        lines.append(" " * width + "".join(c.label.rjust(width) for c in with_queries))
        for row_cell in with_queries:
            row = [row_cell.label.ljust(width)]
            for col_cell in with_queries:
                if row_cell is col_cell:
                    row.append("-".rjust(width))
                else:
                    p = paired_significance(row_cell.per_query, col_cell.per_query)
                    row.append(f"{p:.3g}".rjust(width))
            lines.append("".join(row))
    return "\n".join(lines) + "\n"
