"""End-to-end pretrain, fine-tune and compare runs."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from trashnet_transfer.config import PipelineConfig
from trashnet_transfer.dataset_io import LabeledDataset, save_dataset_container, split_half
from trashnet_transfer.errors import ConfigError, DataError, TransferError
from trashnet_transfer.pipeline_state import (
    STATE_DONE,
    STATE_EVALUATING,
    STATE_EXTRACTING,
    STATE_FAILED,
    STATE_FINE_TUNING,
    STATE_IDLE,
    STATE_LOADING,
    STATE_PRETRAINING,
    STATE_SPLITTING,
    STATE_TRAINING_HEADS,
)
from trashnet_transfer.report import INIT_RANDOM, accuracy, read_report, validate_report
from trashnet_transfer.transfer_pipeline import (
    TransferPipeline,
    load_pipeline_model,
    load_target_dataset,
    run_finetune_and_compare,
    run_pretrain,
)
from trashnet_transfer.weight_file import load_weights

from .conftest import PipelineHarness

COMPARE_STAGES = [
    STATE_IDLE,
    STATE_LOADING,
    STATE_SPLITTING,
    STATE_FINE_TUNING,
    STATE_EXTRACTING,
    STATE_TRAINING_HEADS,
    STATE_EVALUATING,
    STATE_DONE,
]


class TestPretrain:
    """Test the pretraining run."""

    def test_writes_weights(self, harness: PipelineHarness) -> None:
        """Test pretraining writes a loadable preset network."""
        path = harness.pretrain()
        assert path == harness.weights
        net = load_weights(path)
        assert net.spec.input_shape == (3, 32, 32)
        assert net.provenance.startswith("pretrain:alexnet-mini")
        harness.assert_stages(
            harness.last_pipeline, [STATE_IDLE, STATE_LOADING, STATE_PRETRAINING, STATE_DONE]
        )

    def test_is_deterministic(self, harness: PipelineHarness) -> None:
        """Test two pretraining runs write identical bytes."""
        first = harness.pretrain(weights="a.rnfw").read_bytes()
        second = harness.pretrain(weights="b.rnfw").read_bytes()
        assert first == second

    def test_requires_weights_path(self, fast_settings) -> None:
        """Test pretraining without an output path fails in the loading stage."""
        pipeline = TransferPipeline(PipelineConfig.from_mapping(fast_settings))
        with pytest.raises(ConfigError) as err:
            pipeline.run_pretrain()
        assert err.value.stage == STATE_LOADING
        assert pipeline.state == STATE_FAILED

    def test_module_function(self, harness: PipelineHarness) -> None:
        """Test the functional entry point."""
        assert run_pretrain(harness.config()).exists()


class TestCompare:
    """Test the fine-tune and compare run."""

    def test_report(self, harness: PipelineHarness) -> None:
        """Test the report has one validated row per head on shared features."""
        report = harness.compare()
        assert [row.head for row in report.rows] == ["softmax", "svm"]
        assert report.counts == {"train": 18, "test": 18}
        assert all(row.feature_checksum == report.feature_checksum for row in report.rows)
        assert all(row.epochs == 1 for row in report.rows)
        assert report.seeds["split_seed"] == 7
        validate_report(report.to_dict())
        assert read_report(harness.report_path) == report
        harness.assert_stages(harness.last_pipeline, COMPARE_STAGES)

    def test_byte_identical_reports(self, harness: PipelineHarness) -> None:
        """Test two identical comparisons write identical report files."""
        harness.compare(out="first.json")
        harness.compare(out="second.json")
        first = (harness.root / "first.json").read_bytes()
        assert first == (harness.root / "second.json").read_bytes()

    def test_split_seed_changes_split(self, harness: PipelineHarness) -> None:
        """Test a different split seed gives different shared features."""
        a = harness.compare(out="a.json")
        b = harness.compare(out="b.json", split_seed=8)
        assert a.feature_checksum != b.feature_checksum
        assert b.split_seed == 8

    def test_random_init_rows(self, harness: PipelineHarness) -> None:
        """Test the random-init ablation adds a second pair of rows."""
        report = harness.compare(random_init=True)
        assert [(row.head, row.init) for row in report.rows] == [
            ("softmax", "pretrained"),
            ("svm", "pretrained"),
            ("softmax", INIT_RANDOM),
            ("svm", INIT_RANDOM),
        ]
        stages = harness.last_pipeline.stages
        assert stages.count(STATE_FINE_TUNING) == 2
        assert stages[-1] == STATE_DONE

    def test_finetuning_disabled(self, harness: PipelineHarness) -> None:
        """Test zero fine-tuning epochs uses the loaded weights as they are."""
        report = harness.compare(finetune_epochs=0)
        assert all(row.epochs == 0 for row in report.rows)
        harness.assert_stages(harness.last_pipeline, COMPARE_STAGES)

    def test_model_file_reproduces_report(self, harness: PipelineHarness) -> None:
        """Test the saved model scores exactly what the report says."""
        report = harness.compare(model_out="model.rnfw")
        model = load_pipeline_model(harness.root / "model.rnfw")
        config = harness.config()
        test = split_half(load_target_dataset(config), config.split_seed).test
        for head in ("softmax", "svm"):
            predictions = model.predict(test.images, head)
            correct = int(np.sum(predictions == test.labels))
            assert accuracy(correct, len(test)) == report.row(head).accuracy_pct
            assert report.row(head).confusion == [
                [int(np.sum((test.labels == i) & (predictions == j))) for j in range(6)]
                for i in range(6)
            ]
        with pytest.raises(ConfigError):
            model.predict(test.images, "knn")

    def test_cut_index_override(self, harness: PipelineHarness) -> None:
        """Test features can be cut at an earlier layer."""
        harness.pretrain()
        report = harness.compare(cut_index=7, out="cut.json")
        net = load_weights(harness.weights)
        assert report.counts["train"] == 18
        assert net.spec.cut_index == net.spec.layer_count - 1

    def test_stage_callbacks(self, harness: PipelineHarness) -> None:
        """Test callbacks registered on the state machine see each stage."""
        harness.pretrain()
        pipeline = harness.pipeline()
        entered: list[str] = []
        pipeline.state_machine.on_transition(lambda old, new, event: entered.append(new))
        pipeline.run_finetune_and_compare()
        assert entered == COMPARE_STAGES[1:]

    def test_pipeline_is_single_use(self, harness: PipelineHarness) -> None:
        """Test a finished pipeline refuses to run again."""
        harness.compare()
        with pytest.raises(TransferError):
            harness.last_pipeline.run_finetune_and_compare()

    def test_get_info(self, harness: PipelineHarness) -> None:
        """Test diagnostics include stage and accuracies."""
        harness.compare()
        info = harness.last_pipeline.get_info()
        assert info["preset"] == "alexnet-mini"
        assert info["stage"]["current_state"] == STATE_DONE
        assert set(info["accuracies"]) == {"softmax/pretrained", "svm/pretrained"}


class TestFailures:
    """Test failures are attributed to the stage that raised them."""

    def test_missing_weights(self, harness: PipelineHarness) -> None:
        """Test a missing weight file fails while loading."""
        pipeline = harness.pipeline(weights="absent.rnfw")
        with pytest.raises(DataError) as err:
            pipeline.run_finetune_and_compare()
        assert err.value.stage == STATE_LOADING
        harness.assert_stages(pipeline, [STATE_IDLE, STATE_LOADING, STATE_FAILED])

    def test_image_size_mismatch(self, harness: PipelineHarness) -> None:
        """Test target images must match the pretrained input shape."""
        harness.pretrain()
        with pytest.raises(DataError, match="network expects"):
            harness.compare(image_size=40)

    def test_freeze_prefix_too_large(self, harness: PipelineHarness) -> None:
        """Test an impossible freeze prefix is a config error."""
        harness.pretrain()
        with pytest.raises(ConfigError):
            harness.compare(freeze_prefix=99)

    def test_class_too_small_to_split(self, harness: PipelineHarness, tmp_path: Path) -> None:
        """Test a dataset that cannot be halved fails in the splitting stage."""
        harness.pretrain()
        tiny = LabeledDataset(np.zeros((3, 3, 32, 32)), [0, 0, 1], ("a", "b"))
        target = save_dataset_container(tiny, tmp_path / "tiny.rnfw")
        pipeline = harness.pipeline(target=str(target))
        with pytest.raises(DataError) as err:
            pipeline.run_finetune_and_compare()
        assert err.value.stage == STATE_SPLITTING


@pytest.mark.slow
class TestDeskScaleRun:
    """Test the default synthetic experiment."""

    def test_both_heads_reach_ninety_percent(self, tmp_path: Path) -> None:
        """Test defaults (64 px, 300 images, 10 + 50 epochs) score at least 90%."""
        pretrain_config = PipelineConfig.from_mapping({"weights": str(tmp_path / "w.rnfw")})
        run_pretrain(pretrain_config)
        config = PipelineConfig.from_mapping(
            {"weights": str(tmp_path / "w.rnfw"), "out": str(tmp_path / "report.json")}
        )
        report = run_finetune_and_compare(config)
        assert report.counts == {"train": 150, "test": 150}
        for row in report.rows:
            assert row.accuracy_pct >= 90.0, row
        validate_report(report.to_dict())
