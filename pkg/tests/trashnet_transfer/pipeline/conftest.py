"""Shared fixtures and test harness for pipeline tests.

Provides PipelineHarness - a helper that owns a scratch directory and fast
settings, and runs pretraining and comparisons against them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import pytest

from trashnet_transfer.config import PipelineConfig
from trashnet_transfer.const import CONF_MODEL_OUT, CONF_OUT, CONF_WEIGHTS
from trashnet_transfer.report import EvalReport
from trashnet_transfer.transfer_pipeline import TransferPipeline


class PipelineHarness:
    """Test harness around TransferPipeline.

    Usage:
        harness = PipelineHarness(tmp_path, fast_settings)
        harness.pretrain()
        report = harness.compare(out="second.json")
        harness.assert_stages(pipeline, [...])
    """

    def __init__(self, root: Path, settings: dict[str, Any]) -> None:
        self.root = root
        self.settings = dict(settings)
        self.settings.setdefault(CONF_WEIGHTS, str(root / "pretrained.rnfw"))
        self.settings.setdefault(CONF_OUT, str(root / "report.json"))
        self.last_pipeline: TransferPipeline | None = None

    @property
    def weights(self) -> Path:
        return Path(self.settings[CONF_WEIGHTS])

    @property
    def report_path(self) -> Path:
        return Path(self.settings[CONF_OUT])

    def config(self, **overrides: Any) -> PipelineConfig:
        """Resolve the harness settings plus overrides; paths are made absolute."""
        values = {**self.settings, **overrides}
        for key in (CONF_OUT, CONF_MODEL_OUT, CONF_WEIGHTS):
            if values.get(key) is not None and not Path(values[key]).is_absolute():
                values[key] = str(self.root / values[key])
        return PipelineConfig.from_mapping(values)

    def pipeline(self, **overrides: Any) -> TransferPipeline:
        self.last_pipeline = TransferPipeline(self.config(**overrides))
        return self.last_pipeline

    def pretrain(self, **overrides: Any) -> Path:
        return self.pipeline(**overrides).run_pretrain()

    def compare(self, **overrides: Any) -> EvalReport:
        if not self.weights.exists():
            self.pretrain()
        return self.pipeline(**overrides).run_finetune_and_compare()

    @staticmethod
    def assert_stages(pipeline: TransferPipeline, expected: list[str]) -> None:
        assert pipeline.stages == expected, f"stages {pipeline.stages} != {expected}"


@pytest.fixture
def harness(tmp_path: Path, fast_settings: dict[str, Any]) -> PipelineHarness:
    """Return a harness with fast settings in a scratch directory."""
    return PipelineHarness(tmp_path, fast_settings)
