import numpy as np
import pytest

import rcrank as rc
from rcrank.cli import main
from conftest import make_separable_dataset


@pytest.fixture
def files(tmp_path, rng):
    data = make_separable_dataset(rng, n_queries=25, docs_per_query=6)
    paths = {}
    for name, part in {
        "all": data,
        "train": rc.Dataset(data.groups[:15], data.feature_count),
        "valid": rc.Dataset(data.groups[15:20], data.feature_count),
        "test": rc.Dataset(data.groups[20:], data.feature_count),
    }.items():
        path = tmp_path / f"{name}.svm"
        rc.save_dataset(part, path)
        paths[name] = str(path)
    paths["model"] = str(tmp_path / "model.txt")
    paths["tmp"] = tmp_path
    return paths


def run_train(files, *extra):
    return main(
        [
            "train",
            "--train", files["train"],
            "--valid", files["valid"],
            "--variant", "oblivious",
            "--leaves", "4",
            "--lr", "0.15",
            "--max-trees", "10",
            "--model", files["model"],
            *extra,
        ]
    )


class TestTrain:
    def test_writes_model(self, files, capsys):
        assert run_train(files) == 0
        ensemble = rc.load_model(files["model"])
        assert ensemble.variant == "oblivious"
        err = capsys.readouterr().err
        assert "iter=1 train_ndcg@10=" in err

    def test_power_of_two_validation(self, files, capsys):
        code = main(
            [
                "train",
                "--train", files["train"],
                "--variant", "oblivious",
                "--leaves", "10",
                "--lr", "0.1",
                "--model", files["model"],
            ]
        )
        assert code == 1
        assert "power of two" in capsys.readouterr().err

    def test_missing_file_is_runtime_error(self, files, capsys):
        code = main(
            [
                "train",
                "--train", str(files["tmp"] / "nope.svm"),
                "--variant", "standard",
                "--leaves", "4",
                "--lr", "0.1",
                "--model", files["model"],
            ]
        )
        assert code == 2

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag_is_usage_error(self, files, capsys):
        assert run_train(files, "--bogus", "1") == 1

    def test_threads_flag_accepted(self, files, capsys):
        assert run_train(files, "--threads", "2") == 0

    def test_threads_must_be_positive(self, files, capsys):
        assert run_train(files, "--threads", "0") == 1


class TestPredictEval:
    def test_predict_line_count_and_order(self, files, capsys):
        run_train(files)
        out = files["tmp"] / "scores.txt"
        assert main(
            ["predict", "--model", files["model"], "--data", files["test"], "--output", str(out)]
        ) == 0
        lines = out.read_text().splitlines()
        rows = [
            l for l in open(files["test"], encoding="utf-8") if l.strip()
        ]
        assert len(lines) == len(rows)
        # scores follow file order: recompute directly
        ensemble = rc.load_model(files["model"])
        data = rc.load_dataset(files["test"])
        expected = ensemble.score_matrix(data.stacked()[0])
        assert np.allclose([float(v) for v in lines], expected, atol=0)

    def test_predict_preserves_interleaved_row_order(self, files, tmp_path, capsys):
        run_train(files)
        data = tmp_path / "interleaved.svm"
        data.write_text(
            "1 qid:2 1:5.0 2:0.0 3:0.0\n"
            "2 qid:1 1:1.0 2:0.0 3:0.0\n"
            "1 qid:2 1:3.0 2:0.0 3:0.0\n"
            "3 qid:1 1:2.0 2:0.0 3:0.0\n"
        )
        out = tmp_path / "scores.txt"
        assert main(
            ["predict", "--model", files["model"], "--data", str(data), "--output", str(out)]
        ) == 0
        lines = [float(v) for v in out.read_text().splitlines()]
        ensemble = rc.load_model(files["model"])
        expected = [
            rc.score(ensemble, np.array([v, 0.0, 0.0])) for v in (5.0, 1.0, 3.0, 2.0)
        ]
        assert lines == expected

    def test_eval_prints_six_decimals(self, files, capsys):
        run_train(files)
        capsys.readouterr()
        assert main(["eval", "--model", files["model"], "--data", files["test"]]) == 0
        out = capsys.readouterr().out.strip()
        float(out)
        assert len(out.split(".")[1]) == 6

    def test_eval_metric_override(self, files, capsys):
        run_train(files)
        capsys.readouterr()
        main(["eval", "--model", files["model"], "--data", files["test"], "--metric", "ndcg@1"])
        first = capsys.readouterr().out
        main(["eval", "--model", files["model"], "--data", files["test"], "--metric", "ndcg@10"])
        second = capsys.readouterr().out
        assert first != second

    def test_bad_metric_is_usage_error(self, files, capsys):
        run_train(files)
        code = main(
            ["eval", "--model", files["model"], "--data", files["test"], "--metric", "nope"]
        )
        assert code == 1


class TestCvGrid:
    def test_cv_report(self, files, capsys):
        report = files["tmp"] / "cv.csv"
        code = main(
            [
                "cv",
                "--data", files["all"],
                "--variant", "standard",
                "--leaves", "4",
                "--lr", "0.15",
                "--max-trees", "5",
                "--report", str(report),
            ]
        )
        assert code == 0
        lines = report.read_text().splitlines()
        assert lines[0].startswith("variant,leaves")
        assert len(lines) == 6

    def test_grid_report_and_table(self, files, capsys):
        report = files["tmp"] / "grid.csv"
        code = main(
            [
                "grid",
                "--data", files["all"],
                "--variant", "oblivious",
                "--leaves", "2,4",
                "--lr", "0.1,0.2",
                "--max-trees", "3",
                "--report", str(report),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "mean test ndcg@10" in out
        assert report.read_text().count("\n") == 21  # header + 4 cells x 5 folds

    def test_default_grid_matches_published_dimensions(self):
        from rcrank.cli import PAPER_GRID_LEAVES, PAPER_GRID_LR

        leaves = [int(v) for v in PAPER_GRID_LEAVES.split(",")]
        lrs = [float(v) for v in PAPER_GRID_LR.split(",")]
        assert leaves == [8, 16, 32, 64]
        assert lrs == [0.11, 0.13, 0.15, 0.17, 0.19]
        assert len(leaves) * len(lrs) == 20  # cells per variant

    def test_bad_list_is_usage_error(self, files, capsys):
        code = main(
            [
                "grid",
                "--data", files["all"],
                "--variant", "oblivious",
                "--leaves", "a,b",
                "--report", str(files["tmp"] / "g.csv"),
            ]
        )
        assert code == 1


class TestFeatureStatsSignificance:
    def test_feature_stats_and_mapping(self, files, capsys):
        run_train(files)
        capsys.readouterr()
        mapping = files["tmp"] / "mapping.csv"
        code = main(
            [
                "feature-stats",
                "--models", files["model"],
                "--top", "2",
                "--mapping", str(mapping),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert all(len(line.split("\t")) == 2 for line in out)
        lines = mapping.read_text().splitlines()
        assert lines[0] == "old_index,new_index"
        assert len(lines) == 3

    def test_significance(self, files, capsys):
        a = files["tmp"] / "a.txt"
        b = files["tmp"] / "b.txt"
        a.write_text("0.5\n0.6\n0.7\n0.8\n")
        b.write_text("0.4\n0.55\n0.6\n0.72\n")
        assert main(["significance", "--a", str(a), "--b", str(b)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("two-tailed paired t-test: p=")
        assert "n=4" in out

    def test_significance_identical_files(self, files, capsys):
        a = files["tmp"] / "a.txt"
        a.write_text("0.5\n0.6\n")
        assert main(["significance", "--a", str(a), "--b", str(a)]) == 0
        assert "p=1" in capsys.readouterr().out


class TestDeterminism:
    def test_same_seed_same_report(self, files):
        reports = []
        for name in ("r1.csv", "r2.csv"):
            path = files["tmp"] / name
            code = main(
                [
                    "cv",
                    "--data", files["all"],
                    "--variant", "oblivious",
                    "--leaves", "4",
                    "--lr", "0.15",
                    "--max-trees", "3",
                    "--seed", "7",
                    "--report", str(path),
                ]
            )
            assert code == 0
            reports.append(path.read_bytes())
        assert reports[0] == reports[1]
