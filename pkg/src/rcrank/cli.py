"""Command-line interface: train, predict, eval, cv, grid, feature-stats,
significance.

Exit codes: 0 success, 1 usage/parameter error, 2 runtime error.  All
diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiment
from .boosting import ConfigError, TrainConfig, train
from .dataset import DatasetFormatError, load_dataset, parse_line
from .metrics import mean_ndcg, parse_metric
from .model_io import ModelFormatError, load_model, save_model

PAPER_GRID_LEAVES = "8,16,32,64"
PAPER_GRID_LR = "0.11,0.13,0.15,0.17,0.19"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage failures exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_train_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--variant", choices=("standard", "oblivious"), required=True)
    parser.add_argument("--leaves", type=int, required=True)
    parser.add_argument("--lr", type=float, required=True)
    parser.add_argument("--max-trees", type=int, default=1000)
    parser.add_argument("--metric", default="ndcg@10")
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap on worker parallelism (the current implementation is "
        "vectorized single-process, which always satisfies the cap)",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="rcrank", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("train", help="train a model")
    p.add_argument("--train", dest="train_path", required=True)
    p.add_argument("--valid", dest="valid_path", default=None)
    _add_train_options(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_train)

    p = commands.add_parser("predict", help="score rows of a LibSVM file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_predict)

    p = commands.add_parser("eval", help="mean NDCG of a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--metric", default=None, help="defaults to the model's metric")
    p.set_defaults(func=_cmd_eval)

    p = commands.add_parser("cv", help="cross-validated evaluation of one setting")
    p.add_argument("--data", required=True)
    _add_train_options(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--report", required=True, help="results CSV path")
    p.set_defaults(func=_cmd_cv)

    p = commands.add_parser("grid", help="cross-validated hyperparameter grid")
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=("standard", "oblivious"), required=True)
    p.add_argument("--leaves", default=PAPER_GRID_LEAVES, help="comma-separated list")
    p.add_argument("--lr", default=PAPER_GRID_LR, help="comma-separated list")
    p.add_argument("--max-trees", type=int, default=1000)
    p.add_argument("--metric", default="ndcg@10")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--report", required=True, help="results CSV path")
    p.set_defaults(func=_cmd_grid)

    p = commands.add_parser("feature-stats", help="rule occurrences per feature")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--top", type=int, default=50)
    p.add_argument("--mapping", default=None, help="write old->new index CSV here")
    p.set_defaults(func=_cmd_feature_stats)

    p = commands.add_parser("significance", help="paired t-test of two score files")
    p.add_argument("--a", dest="path_a", required=True)
    p.add_argument("--b", dest="path_b", required=True)
    p.set_defaults(func=_cmd_significance)

    return parser


def _config_from_args(args) -> TrainConfig:
    try:
        metric = parse_metric(args.metric)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if args.threads is not None and args.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {args.threads}")
    return TrainConfig(
        tree_variant=args.variant,
        leaves=args.leaves,
        learning_rate=args.lr,
        max_trees=args.max_trees,
        metric=metric,
        sigma=args.sigma,
        seed=args.seed,
    )


def _cmd_train(args) -> int:
    config = _config_from_args(args)
    train_data = load_dataset(args.train_path)
    valid_data = (
        load_dataset(args.valid_path, feature_count=train_data.feature_count)
        if args.valid_path
        else None
    )
    ensemble, log = train(train_data, valid_data, config, progress=True)
    save_model(ensemble, args.model)
    print(
        f"model written to {args.model} ({len(ensemble)} trees)",
        file=sys.stderr,
    )
    return 0


def _cmd_predict(args) -> int:
    ensemble = load_model(args.model)
    vectors = []
    with open(args.data, "r", encoding="utf-8") as handle:
        for number, text in enumerate(handle, start=1):
            if not text.split("#", 1)[0].strip():
                continue
            _, _, features = parse_line(
                text, ensemble.feature_count, line_number=number
            )
            vectors.append(features)
    scores = (
        ensemble.score_matrix(np.vstack(vectors)) if vectors else np.empty(0)
    )
    with open(args.output, "w", encoding="utf-8", newline="\n") as handle:
        for value in scores:
            handle.write(f"{float(value)!r}\n")
    return 0


def _cmd_eval(args) -> int:
    if args.metric:
        try:
            metric = parse_metric(args.metric)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    else:
        metric = None
    ensemble = load_model(args.model)
    if metric is None:
        metric = ensemble.metric
    data = load_dataset(args.data, feature_count=ensemble.feature_count)
    value = mean_ndcg(data, ensemble.score_matrix(data.stacked()[0]), metric)
    print(f"{value:.6f}")
    return 0


def _cmd_cv(args) -> int:
    config = _config_from_args(args)
    if args.folds < 2:
        raise ConfigError(f"folds must be >= 2, got {args.folds}")
    data = load_dataset(args.data)
    cell = experiment.run_cv(data, config, n_folds=args.folds)
    experiment.write_results_csv([cell], args.report)
    print(f"{cell.mean:.6f}")
    return 0


def _parse_list(text: str, kind, what: str) -> list:
    try:
        values = [kind(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad {what} list {text!r}") from None
    if not values:
        raise ConfigError(f"empty {what} list")
    return values


def _cmd_grid(args) -> int:
    leaves_list = _parse_list(args.leaves, int, "leaves")
    lr_list = _parse_list(args.lr, float, "learning rate")
    if args.folds < 2:
        raise ConfigError(f"folds must be >= 2, got {args.folds}")
    if args.threads is not None and args.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {args.threads}")
    try:
        metric = parse_metric(args.metric)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    base = TrainConfig(
        tree_variant=args.variant,
        leaves=leaves_list[0],
        learning_rate=lr_list[0],
        max_trees=args.max_trees,
        metric=metric,
        sigma=args.sigma,
        seed=args.seed,
    )
    data = load_dataset(args.data)
    cells = experiment.run_grid(
        data, args.variant, leaves_list, lr_list, base_config=base, n_folds=args.folds
    )
    experiment.write_results_csv(cells, args.report)
    sys.stdout.write(experiment.format_grid_report(cells, metric.name))
    return 0


def _cmd_feature_stats(args) -> int:
    models = [load_model(path) for path in args.models]
    usage = experiment.feature_usage(models)
    if args.top < 1 or args.top > usage.feature_count:
        raise ConfigError(
            f"top must be in 1..{usage.feature_count}, got {args.top}"
        )
    ranked = sorted(usage.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    for feature, count in ranked:
        print(f"{feature}\t{count}")
    if args.mapping:
        kept = sorted(usage.top(args.top))
        with open(args.mapping, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("old_index,new_index\n")
            for new, old in enumerate(kept):
                handle.write(f"{old},{new}\n")
    return 0


def _read_score_file(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{number}: bad score {line!r}") from None
    return np.array(values)


def _cmd_significance(args) -> int:
    a = _read_score_file(args.path_a)
    b = _read_score_file(args.path_b)
    p = experiment.paired_significance(a, b)
    print(f"{experiment.SIGNIFICANCE_TEST_NAME}: p={p:.6g} n={len(a)}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"rcrank: error: {err}", file=sys.stderr)
        return 1
    except (DatasetFormatError, ModelFormatError, OSError, ValueError, RuntimeError) as err:
        print(f"rcrank: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
