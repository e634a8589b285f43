"""Tests for evaluation reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from trashnet_transfer.errors import DataError, DomainError
from trashnet_transfer.report import (
    INIT_RANDOM,
    EvalReport,
    ReportRow,
    accuracy,
    confusion_matrix,
    feature_checksum,
    per_class_metrics,
    read_report,
    render_table,
    validate_report,
    write_report,
)

NAMES = ("glass", "paper", "cardboard")
LABELS = [0, 0, 1, 1, 2, 2]


def _report(model: str = "alexnet-mini") -> EvalReport:
    rows = [
        ReportRow.evaluate(model, "softmax", [0, 0, 1, 2, 2, 2], LABELS, NAMES, 200),
        ReportRow.evaluate(model, "svm", LABELS, LABELS, NAMES, 200),
    ]
    return EvalReport(
        rows=rows,
        split_seed=7,
        feature_checksum="abc",
        counts={"train": 6, "test": 6},
        seeds={"seed": 1, "split_seed": 7},
    )


class TestAccuracy:
    """Test percentage rounding."""

    @pytest.mark.parametrize(
        ("correct", "total", "expected"),
        [(1, 3, 33.33), (2, 3, 66.67), (1, 32, 3.13), (3, 32, 9.38), (1, 400, 0.25), (5, 5, 100.0)],
    )
    def test_half_up(self, correct: int, total: int, expected: float) -> None:
        """Test two-decimal rounding with ties going up."""
        assert accuracy(correct, total) == expected

    def test_invalid(self) -> None:
        """Test impossible counts raise DomainError."""
        with pytest.raises(DomainError):
            accuracy(0, 0)
        with pytest.raises(DomainError):
            accuracy(4, 3)


class TestConfusion:
    """Test confusion matrices and per-class metrics."""

    def test_matrix(self) -> None:
        """Test rows are true classes and columns predictions."""
        matrix = confusion_matrix([0, 1, 1], [0, 0, 1], 2)
        np.testing.assert_array_equal(matrix, [[1, 1], [0, 1]])

    def test_out_of_range(self) -> None:
        """Test class indices are bounds-checked."""
        with pytest.raises(DomainError):
            confusion_matrix([0, 3], [0, 1], 2)
        with pytest.raises(DomainError):
            confusion_matrix([0], [0, 1], 2)

    def test_per_class(self) -> None:
        """Test precision and recall, with empty columns scoring zero."""
        metrics = per_class_metrics([[2, 0, 0], [0, 1, 1], [0, 0, 0]], NAMES)
        assert metrics[0] == {"name": "glass", "precision": 1.0, "recall": 1.0}
        assert metrics[1] == {"name": "paper", "precision": 1.0, "recall": 0.5}
        assert metrics[2] == {"name": "cardboard", "precision": 0.0, "recall": 0.0}

    def test_checksum(self) -> None:
        """Test the feature checksum depends on the values."""
        a = np.ones((2, 3))
        assert feature_checksum(a) == feature_checksum(a.copy())
        assert feature_checksum(a) != feature_checksum(a * 2)
        assert len(feature_checksum(a)) == 64


class TestEvalReport:
    """Test report rows, validation and files."""

    def test_evaluate(self) -> None:
        """Test a row derived from predictions."""
        row = _report().row("softmax")
        assert row.accuracy_pct == 83.33
        assert row.confusion == [[2, 0, 0], [0, 1, 1], [0, 0, 2]]
        assert row.init == "pretrained"

    def test_row_lookup(self) -> None:
        """Test a missing row raises KeyError."""
        with pytest.raises(KeyError):
            _report().row("svm", INIT_RANDOM)

    def test_round_trip(self, tmp_path: Path) -> None:
        """Test write then read returns an equal report."""
        report = _report()
        path = write_report(report, tmp_path / "out" / "report.json")
        assert read_report(path) == report

    def test_reports_are_byte_stable(self, tmp_path: Path) -> None:
        """Test equal reports serialize to equal bytes."""
        a = write_report(_report(), tmp_path / "a.json").read_bytes()
        b = write_report(_report(), tmp_path / "b.json").read_bytes()
        assert a == b

    def test_malformed_json(self, tmp_path: Path) -> None:
        """Test unparseable JSON is a data error."""
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(DataError):
            read_report(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test a missing report is a data error."""
        with pytest.raises(DataError):
            read_report(tmp_path / "none.json")

    def test_schema_violation(self) -> None:
        """Test an unknown head name fails validation."""
        doc = _report().to_dict()
        doc["rows"][0]["head"] = "knn"
        with pytest.raises(DataError):
            validate_report(doc)

    def test_inconsistent_accuracy(self) -> None:
        """Test an accuracy that disagrees with the confusion matrix."""
        doc = _report().to_dict()
        doc["rows"][0]["accuracy_pct"] = 90.0
        with pytest.raises(DataError, match="disagrees"):
            validate_report(doc)

    def test_ragged_confusion(self) -> None:
        """Test a confusion matrix with a short row is a data error."""
        doc = _report().to_dict()
        doc["rows"][0]["confusion"] = [[2, 0, 0], [0, 1], [0, 0, 2]]
        with pytest.raises(DataError, match="not 3×3"):
            validate_report(doc)

    def test_inconsistent_counts(self) -> None:
        """Test a confusion matrix that does not cover the test half."""
        doc = _report().to_dict()
        doc["counts"]["test"] = 7
        with pytest.raises(DataError):
            validate_report(doc)

    def test_seeds_are_optional(self) -> None:
        """Test reports without seeds validate."""
        doc = _report().to_dict()
        del doc["seeds"]
        assert EvalReport.from_dict(doc).seeds == {}

    def test_file_is_json(self, tmp_path: Path) -> None:
        """Test the written file holds the documented keys."""
        path = write_report(_report(), tmp_path / "r.json")
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert set(doc) == {"rows", "split_seed", "feature_checksum", "counts", "seeds"}


class TestRenderTable:
    """Test the text comparison table."""

    def test_googlenet_row(self) -> None:
        """Test a GoogleNet line with both heads matches the fixed layout."""
        rows = [
            ReportRow("googlenet-mini", "softmax", 88.10, 200, [[1]], []),
            ReportRow("googlenet-mini", "svm", 97.86, 200, [[1]], []),
        ]
        table = render_table(EvalReport(rows, 7, "x", {"train": 1, "test": 1}))
        lines = table.splitlines()
        assert lines[0] == f"{'Model':<28}{'Softmax':>9}{'SVM':>9}{'Data Aug.':>11}{'Epoch':>7}"
        assert lines[1] == f"{'GoogleNet':<28}{'88.10':>9}{'97.86':>9}{'-':>11}{200:>7}"

    def test_random_init_rows(self) -> None:
        """Test random-init rows get their own labelled line."""
        base = _report()
        extra = [
            ReportRow("alexnet-mini", "softmax", 50.0, 200, [[1]], [], init=INIT_RANDOM),
        ]
        table = render_table(EvalReport(base.rows + extra, 7, "x", {"train": 6, "test": 6}))
        assert "AlexNet (random init)" in table
        assert "    -" in table.splitlines()[2]

    def test_footer(self) -> None:
        """Test seeds, counts and checksum are printed."""
        table = render_table(_report())
        assert "split_seed=7 train=6 test=6" in table
        assert "feature_checksum=abc" in table
        assert "seed=1" in table
        assert "glass" in table
