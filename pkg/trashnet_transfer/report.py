"""Evaluation reports: accuracy, confusion matrices, JSON and text tables.

Reports contain no timestamps or host details, so two runs with the same
seeds produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import numpy.typing as npt
import voluptuous as vol

from .const import HEAD_SOFTMAX, HEAD_SVM, HEADS
from .errors import DataError, DomainError
from .presets import PRESET_TITLES

_LOGGER = logging.getLogger(__name__)

INIT_PRETRAINED = "pretrained"
INIT_RANDOM = "random"


def accuracy(correct: int, total: int) -> float:
    """100·correct/total rounded half-up to two decimals."""
    if total <= 0:
        raise DomainError("accuracy needs a positive total")
    if not 0 <= correct <= total:
        raise DomainError(f"correct count {correct} outside 0..{total}")
    pct = (Decimal(100) * Decimal(correct) / Decimal(total)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )
    return float(pct)


def confusion_matrix(
    predictions: npt.ArrayLike, labels: npt.ArrayLike, k: int
) -> npt.NDArray[np.int64]:
    """Entry (i, j) counts samples of true class i predicted as j."""
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(labels, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise DomainError(f"{pred.size} predictions for {true.size} labels")
    if pred.size and (min(pred.min(), true.min()) < 0 or max(pred.max(), true.max()) >= k):
        raise DomainError(f"class indices must lie in 0..{k - 1}")
    matrix = np.zeros((k, k), dtype=np.int64)
    np.add.at(matrix, (true, pred), 1)
    return matrix


def per_class_metrics(
    confusion: npt.ArrayLike, class_names: Sequence[str]
) -> list[dict[str, Any]]:
    """Precision and recall per class; an empty row or column scores 0."""
    matrix = np.asarray(confusion, dtype=np.int64)
    metrics = []
    for c, name in enumerate(class_names):
        hits = int(matrix[c, c])
        predicted = int(matrix[:, c].sum())
        actual = int(matrix[c, :].sum())
        metrics.append(
            {
                "name": name,
                "precision": round(hits / predicted, 4) if predicted else 0.0,
                "recall": round(hits / actual, 4) if actual else 0.0,
            }
        )
    return metrics


def feature_checksum(*matrices: npt.ArrayLike) -> str:
    """SHA-256 over the float64 bytes of the given feature matrices."""
    digest = hashlib.sha256()
    for matrix in matrices:
        digest.update(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    return digest.hexdigest()


@dataclass(frozen=True)
class ReportRow:
    """One (model, head) result on the test half."""

    model: str
    head: str
    accuracy_pct: float
    epochs: int
    confusion: list[list[int]]
    per_class: list[dict[str, Any]]
    data_aug: bool = False
    init: str = INIT_PRETRAINED
    feature_checksum: str = ""

    @staticmethod
    def evaluate(
        model: str,
        head: str,
        predictions: npt.ArrayLike,
        labels: npt.ArrayLike,
        class_names: Sequence[str],
        epochs: int,
        init: str = INIT_PRETRAINED,
        checksum: str = "",
    ) -> ReportRow:
        matrix = confusion_matrix(predictions, labels, len(class_names))
        return ReportRow(
            model=model,
            head=head,
            accuracy_pct=accuracy(int(np.trace(matrix)), int(matrix.sum())),
            epochs=epochs,
            confusion=matrix.tolist(),
            per_class=per_class_metrics(matrix, class_names),
            init=init,
            feature_checksum=checksum,
        )


@dataclass(frozen=True)
class EvalReport:
    """Comparison of both heads on identical features."""

    rows: list[ReportRow]
    split_seed: int
    feature_checksum: str
    counts: dict[str, int]
    seeds: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "rows": [asdict(row) for row in self.rows],
            "split_seed": self.split_seed,
            "feature_checksum": self.feature_checksum,
            "counts": dict(self.counts),
        }
        if self.seeds:
            doc["seeds"] = dict(self.seeds)
        return doc

    @staticmethod
    def from_dict(doc: Mapping[str, Any]) -> EvalReport:
        valid = validate_report(doc)
        return EvalReport(
            rows=[ReportRow(**row) for row in valid["rows"]],
            split_seed=valid["split_seed"],
            feature_checksum=valid["feature_checksum"],
            counts=dict(valid["counts"]),
            seeds=dict(valid.get("seeds", {})),
        )

    def row(self, head: str, init: str = INIT_PRETRAINED) -> ReportRow:
        for row in self.rows:
            if row.head == head and row.init == init:
                return row
        raise KeyError(f"no {init} row for head {head}")


# Validation

_COUNT = vol.All(int, vol.Range(min=0))
_UNIT = vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0))

ROW_SCHEMA = vol.Schema(
    {
        vol.Required("model"): vol.All(str, vol.Length(min=1)),
        vol.Required("head"): vol.In(HEADS),
        vol.Required("accuracy_pct"): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=100.0)),
        vol.Required("epochs"): _COUNT,
        vol.Required("data_aug"): bool,
        vol.Required("confusion"): [[_COUNT]],
        vol.Required("per_class"): [
            {
                vol.Required("name"): str,
                vol.Required("precision"): _UNIT,
                vol.Required("recall"): _UNIT,
            }
        ],
        vol.Optional("init", default=INIT_PRETRAINED): vol.In((INIT_PRETRAINED, INIT_RANDOM)),
        vol.Optional("feature_checksum", default=""): str,
    }
)

REPORT_SCHEMA = vol.Schema(
    {
        vol.Required("rows"): vol.All([ROW_SCHEMA], vol.Length(min=1)),
        vol.Required("split_seed"): _COUNT,
        vol.Required("feature_checksum"): str,
        vol.Required("counts"): {vol.Required("train"): _COUNT, vol.Required("test"): _COUNT},
        vol.Optional("seeds"): {str: _COUNT},
    }
)


def _check_row_consistency(row: Mapping[str, Any], test_count: int) -> None:
    k = len(row["per_class"])
    if len(row["confusion"]) != k or any(len(line) != k for line in row["confusion"]):
        raise DataError(f"{row['head']} row: confusion matrix is not {k}×{k}")
    matrix = np.asarray(row["confusion"], dtype=np.int64)
    total = int(matrix.sum())
    if total != test_count:
        raise DataError(
            f"{row['head']} row: confusion matrix counts {total} samples, report says {test_count}"
        )
    if total and accuracy(int(np.trace(matrix)), total) != row["accuracy_pct"]:
        raise DataError(
            f"{row['head']} row: accuracy {row['accuracy_pct']} disagrees with its confusion matrix"
        )


def validate_report(doc: Any) -> dict[str, Any]:
    """Check a report document's schema and internal consistency."""
    try:
        valid = REPORT_SCHEMA(doc)
    except vol.Invalid as err:
        raise DataError(f"invalid report: {err}") from err
    for row in valid["rows"]:
        _check_row_consistency(row, valid["counts"]["test"])
    return valid


# Files


def write_report(report: EvalReport, path: str | Path) -> Path:
    target = Path(path)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot write report {target}: {err}") from err
    _LOGGER.info("Wrote report to %s", target)
    return target


def read_report(path: str | Path) -> EvalReport:
    """Parse and validate a report JSON file."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot read report {source}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DataError(f"{source}: malformed JSON: {err}") from err
    return EvalReport.from_dict(doc)


# Rendering


def model_title(model: str) -> str:
    return PRESET_TITLES.get(model, model)


def _cell(row: ReportRow | None) -> str:
    return "-" if row is None else f"{row.accuracy_pct:.2f}"


def render_table(report: EvalReport) -> str:
    """Comparison table with one line per model and initialization.

    Columns: Model, Softmax, SVM, Data Aug., Epoch; accuracies in percent.
    """
    groups: dict[tuple[str, str], dict[str, ReportRow]] = {}
    for row in report.rows:
        groups.setdefault((row.model, row.init), {})[row.head] = row

    lines = [f"{'Model':<28}{'Softmax':>9}{'SVM':>9}{'Data Aug.':>11}{'Epoch':>7}"]
    for (model, init), heads in groups.items():
        title = model_title(model)
        if init != INIT_PRETRAINED:
            title = f"{title} ({init} init)"
        any_row = next(iter(heads.values()))
        aug = "+" if any_row.data_aug else "-"
        lines.append(
            f"{title:<28}{_cell(heads.get(HEAD_SOFTMAX)):>9}{_cell(heads.get(HEAD_SVM)):>9}"
            f"{aug:>11}{any_row.epochs:>7}"
        )

    lines.append("")
    for row in report.rows:
        lines.append(f"{model_title(row.model)} / {row.head} / {row.init}:")
        for metrics in row.per_class:
            lines.append(
                f"  {metrics['name']:<12} precision={metrics['precision']:.4f}"
                f" recall={metrics['recall']:.4f}"
            )

    lines.append("")
    lines.append(
        f"split_seed={report.split_seed} train={report.counts.get('train', 0)}"
        f" test={report.counts.get('test', 0)}"
    )
    for name, value in report.seeds.items():
        lines.append(f"{name}={value}")
    lines.append(f"feature_checksum={report.feature_checksum}")
    return "\n".join(lines) + "\n"
