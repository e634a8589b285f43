"""Tests for the command-line interface."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from trashnet_transfer.cli import exit_code_for, main
from trashnet_transfer.const import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE
from trashnet_transfer.errors import (
    ChecksumError,
    ConfigError,
    DomainError,
    ImageDecodeError,
    SpecError,
    TrainingError,
    UsageError,
)
from trashnet_transfer.transfer_pipeline import load_features, load_head

FAST_FLAGS = ["--image-size", "32", "--per-class", "6", "--batch-size", "8"]

_RAGGED_REPORT = {
    "rows": [
        {
            "model": "alexnet-mini",
            "head": "svm",
            "accuracy_pct": 100.0,
            "epochs": 1,
            "data_aug": False,
            "confusion": [[1, 1], [0]],
            "per_class": [
                {"name": "glass", "precision": 1.0, "recall": 1.0},
                {"name": "paper", "precision": 1.0, "recall": 1.0},
            ],
        }
    ],
    "split_seed": 7,
    "feature_checksum": "abc",
    "counts": {"train": 2, "test": 2},
}


def _pretrain(weights: Path) -> int:
    return main(["pretrain", *FAST_FLAGS, "--epochs", "1", "--weights", str(weights)])


def _compare(weights: Path, out: Path, *extra: str) -> int:
    return main(
        [
            "compare",
            *FAST_FLAGS,
            "--epochs",
            "1",
            "--softmax-epochs",
            "20",
            "--weights",
            str(weights),
            "--out",
            str(out),
            *extra,
        ]
    )


class TestUsage:
    """Test argument handling and exit codes."""

    def test_no_subcommand(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test a bare invocation is a usage error."""
        assert main([]) == EXIT_USAGE
        assert "subcommand is required" in capsys.readouterr().err

    def test_help(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test --help succeeds and lists the subcommands."""
        assert main(["--help"]) == EXIT_OK
        out = capsys.readouterr().out
        for command in ("synth-data", "pretrain", "compare", "extract", "train-head", "report"):
            assert command in out

    def test_subcommand_help_lists_defaults(
        self, capsys: pytest.CaptureFixture[str], monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Test every compare flag documents its default."""
        monkeypatch.setenv("COLUMNS", "200")
        assert main(["compare", "--help"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "default: alexnet-mini" in out
        assert "default: 50" in out

    def test_unknown_subcommand(self) -> None:
        """Test an unknown subcommand is a usage error."""
        assert main(["train-everything"]) == EXIT_USAGE

    def test_bad_flag_value(self) -> None:
        """Test a non-numeric value for a numeric flag."""
        assert main(["compare", "--svm-c", "lots"]) == EXIT_USAGE

    def test_compare_requires_weights(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test compare without --weights names the missing flag."""
        assert main(["compare", "--out", str(tmp_path / "r.json")]) == EXIT_USAGE
        assert "error [compare]: compare requires --weights" in capsys.readouterr().err

    def test_extract_requires_out(self, tmp_path: Path) -> None:
        """Test extract without --out is a usage error."""
        assert main(["extract", "--weights", str(tmp_path / "w.rnfw")]) == EXIT_USAGE

    def test_invalid_setting(self) -> None:
        """Test a schema violation from a flag is a usage error."""
        assert main(["pretrain", "--batch-size", "0", "--weights", "w.rnfw"]) == EXIT_USAGE

    def test_config_file_unknown_key(self, tmp_path: Path) -> None:
        """Test a config file with an unknown key is a usage error."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"bogus": 1}), encoding="utf-8")
        assert main(["pretrain", "--config", str(path), "--weights", "w.rnfw"]) == EXIT_USAGE

    @pytest.mark.parametrize(
        ("error", "code"),
        [
            (UsageError("x"), EXIT_USAGE),
            (ConfigError("x"), EXIT_USAGE),
            (ImageDecodeError("x"), EXIT_DATA),
            (ChecksumError("x"), EXIT_DATA),
            (FileNotFoundError("x"), EXIT_DATA),
            (TrainingError("x", 1, 1), EXIT_NUMERIC),
            (DomainError("x"), EXIT_NUMERIC),
            (SpecError("x"), EXIT_NUMERIC),
        ],
    )
    def test_exit_code_mapping(self, error: BaseException, code: int) -> None:
        """Test each error family maps to its exit code."""
        assert exit_code_for(error) == code


class TestReportCommand:
    """Test rendering stored reports."""

    def test_malformed_report(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test malformed JSON is a data error."""
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        assert main(["report", str(path)]) == EXIT_DATA
        assert "error [report]" in capsys.readouterr().err

    def test_ragged_confusion(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test a report with a ragged confusion matrix exits with the data code."""
        path = tmp_path / "ragged.json"
        path.write_text(json.dumps(_RAGGED_REPORT), encoding="utf-8")
        assert main(["report", str(path)]) == EXIT_DATA
        assert "error [report]" in capsys.readouterr().err

    def test_missing_report(self, tmp_path: Path) -> None:
        """Test a missing report is a data error."""
        assert main(["report", str(tmp_path / "none.json")]) == EXIT_DATA


class TestSynthData:
    """Test writing a synthetic class tree."""

    def test_writes_tree(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test one directory per class with PPM files."""
        out = tmp_path / "tree"
        code = main(["synth-data", "--out", str(out), "--image-size", "8", "--per-class", "2"])
        assert code == EXIT_OK
        assert len(sorted(out.glob("*/*.ppm"))) == 12
        assert len([p for p in out.iterdir() if p.is_dir()]) == 6
        stdout = capsys.readouterr().out
        assert "data_seed=7" in stdout
        assert "images=12 classes=6" in stdout

    def test_same_seed_same_bytes(self, tmp_path: Path) -> None:
        """Test two runs with the same seed write identical files."""
        for name in ("a", "b"):
            main(["synth-data", "--out", str(tmp_path / name), "--image-size", "8", "--per-class", "2", "--seed", "3"])
        for path in sorted((tmp_path / "a").glob("*/*.ppm")):
            twin = tmp_path / "b" / path.relative_to(tmp_path / "a")
            assert path.read_bytes() == twin.read_bytes()


class TestPipelineCommands:
    """Test pretrain, compare, extract and train-head from the command line."""

    def test_pretrain_then_compare(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test identical invocations give byte-identical reports and tables."""
        weights = tmp_path / "w.rnfw"
        assert _pretrain(weights) == EXIT_OK
        pretrain_out = capsys.readouterr().out
        assert "seed=7" in pretrain_out
        assert f"weights: {weights}" in pretrain_out

        assert _compare(weights, tmp_path / "r1.json") == EXIT_OK
        first = capsys.readouterr().out
        assert _compare(weights, tmp_path / "r2.json") == EXIT_OK
        second = capsys.readouterr().out

        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()
        table = first.split("report:")[0]
        assert table == second.split("report:")[0]
        assert table.splitlines()[1].startswith("AlexNet")

        assert main(["report", str(tmp_path / "r1.json")]) == EXIT_OK
        assert capsys.readouterr().out == table

    def test_compare_missing_weights_names_stage(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test a missing weight file is a data error in the loading stage."""
        code = _compare(tmp_path / "absent.rnfw", tmp_path / "r.json")
        assert code == EXIT_DATA
        assert "error [loading]" in capsys.readouterr().err

    def test_divergence_is_numeric_failure(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Test a diverging pretraining run exits with the numeric code."""
        code = main(
            ["pretrain", *FAST_FLAGS, "--epochs", "1", "--lr", "1e300", "--weights", str(tmp_path / "w.rnfw")]
        )
        assert code == EXIT_NUMERIC
        assert "error [pretraining]" in capsys.readouterr().err

    def test_extract_and_train_head(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test features and a head can be produced step by step."""
        weights = tmp_path / "w.rnfw"
        assert _pretrain(weights) == EXIT_OK
        features = tmp_path / "features.rnfw"
        code = main(
            ["extract", "--weights", str(weights), "--image-size", "32", "--per-class", "6", "--out", str(features)]
        )
        assert code == EXIT_OK
        matrix, labels, names = load_features(features)
        assert matrix.shape == (36, 64)
        assert labels.shape == (36,)
        assert len(names) == 6

        head_path = tmp_path / "head.rnfw"
        code = main(
            [
                "train-head",
                "--features",
                str(features),
                "--head",
                "softmax",
                "--softmax-epochs",
                "5",
                "--out",
                str(head_path),
            ]
        )
        assert code == EXIT_OK
        assert "head=softmax classes=6 features=64" in capsys.readouterr().out
        head = load_head(head_path)
        assert head.class_count == 6
        assert head.predict_many(matrix).shape == (36,)

    def test_config_file_settings(self, tmp_path: Path) -> None:
        """Test settings can come from a config file."""
        config = tmp_path / "run.json"
        config.write_text(
            json.dumps({"image_size": 32, "per_class": 6, "pretrain_epochs": 1, "batch_size": 8}),
            encoding="utf-8",
        )
        weights = tmp_path / "w.rnfw"
        assert main(["pretrain", "--config", str(config), "--weights", str(weights)]) == EXIT_OK
        assert weights.exists()
