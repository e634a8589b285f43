"""Pipeline configuration: schema, config files and the PipelineConfig value.

Values are resolved as built-in defaults < JSON config file < command-line
flags. The JSON file uses the flat keys of PIPELINE_SCHEMA; unknown keys are
rejected.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import voluptuous as vol

from .classifier_heads import HeadTrainConfig
from .cnn_engine import TrainConfig
from .const import (
    CONF_BATCH_SIZE,
    CONF_CUT_INDEX,
    CONF_DATA_SEED,
    CONF_FINETUNE_EPOCHS,
    CONF_FREEZE_PREFIX,
    CONF_IMAGE_SIZE,
    CONF_LEARNING_RATE,
    CONF_MODEL_OUT,
    CONF_NOISE,
    CONF_OUT,
    CONF_PER_CLASS,
    CONF_PRESET,
    CONF_PRETRAIN_EPOCHS,
    CONF_RANDOM_INIT,
    CONF_SEED,
    CONF_SOFTMAX_EPOCHS,
    CONF_SOFTMAX_LR,
    CONF_SOURCE,
    CONF_SOURCE_NOISE,
    CONF_SOURCE_SEED,
    CONF_SPLIT_SEED,
    CONF_SVM_C,
    CONF_SVM_MAX_PASSES,
    CONF_SVM_TOL,
    CONF_TARGET,
    CONF_WEIGHTS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DATA_SEED,
    DEFAULT_FINETUNE_EPOCHS,
    DEFAULT_FREEZE_PREFIX,
    DEFAULT_IMAGE_SIZE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_NOISE,
    DEFAULT_PER_CLASS,
    DEFAULT_PRESET,
    DEFAULT_PRETRAIN_EPOCHS,
    DEFAULT_REPORT_PATH,
    DEFAULT_SEED,
    DEFAULT_SOFTMAX_EPOCHS,
    DEFAULT_SOFTMAX_LR,
    DEFAULT_SOURCE_NOISE,
    DEFAULT_SOURCE_SEED,
    DEFAULT_SPLIT_SEED,
    DEFAULT_SVM_C,
    DEFAULT_SVM_TOL,
)
from .errors import ConfigError, DataError
from .presets import PRESETS

_LOGGER = logging.getLogger(__name__)

_SEED = vol.All(int, vol.Range(min=0, max=2**64 - 1))
_NON_NEGATIVE_INT = vol.All(int, vol.Range(min=0))
_POSITIVE_INT = vol.All(int, vol.Range(min=1))
_NON_NEGATIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0.0))
_POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_UNIT_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0))
_PATH = vol.Any(None, vol.All(str, vol.Length(min=1)))

PIPELINE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_PRESET, default=DEFAULT_PRESET): vol.In(list(PRESETS)),
        vol.Optional(CONF_CUT_INDEX, default=None): vol.Any(None, _NON_NEGATIVE_INT),
        vol.Optional(CONF_FREEZE_PREFIX, default=DEFAULT_FREEZE_PREFIX): _NON_NEGATIVE_INT,
        vol.Optional(CONF_PRETRAIN_EPOCHS, default=DEFAULT_PRETRAIN_EPOCHS): _POSITIVE_INT,
        vol.Optional(CONF_FINETUNE_EPOCHS, default=DEFAULT_FINETUNE_EPOCHS): _NON_NEGATIVE_INT,
        vol.Optional(CONF_LEARNING_RATE, default=DEFAULT_LEARNING_RATE): _NON_NEGATIVE_FLOAT,
        vol.Optional(CONF_BATCH_SIZE, default=DEFAULT_BATCH_SIZE): _POSITIVE_INT,
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): _SEED,
        vol.Optional(CONF_SPLIT_SEED, default=DEFAULT_SPLIT_SEED): _SEED,
        vol.Optional(CONF_SOFTMAX_LR, default=DEFAULT_SOFTMAX_LR): _NON_NEGATIVE_FLOAT,
        vol.Optional(CONF_SOFTMAX_EPOCHS, default=DEFAULT_SOFTMAX_EPOCHS): _NON_NEGATIVE_INT,
        vol.Optional(CONF_SVM_C, default=DEFAULT_SVM_C): _POSITIVE_FLOAT,
        vol.Optional(CONF_SVM_TOL, default=DEFAULT_SVM_TOL): _POSITIVE_FLOAT,
        vol.Optional(CONF_SVM_MAX_PASSES, default=None): vol.Any(None, _POSITIVE_INT),
        vol.Optional(CONF_SOURCE, default=None): _PATH,
        vol.Optional(CONF_TARGET, default=None): _PATH,
        vol.Optional(CONF_WEIGHTS, default=None): _PATH,
        vol.Optional(CONF_OUT, default=DEFAULT_REPORT_PATH): _PATH,
        vol.Optional(CONF_MODEL_OUT, default=None): _PATH,
        vol.Optional(CONF_RANDOM_INIT, default=False): bool,
        vol.Optional(CONF_IMAGE_SIZE, default=DEFAULT_IMAGE_SIZE): _POSITIVE_INT,
        vol.Optional(CONF_PER_CLASS, default=DEFAULT_PER_CLASS): vol.All(int, vol.Range(min=2)),
        vol.Optional(CONF_NOISE, default=DEFAULT_NOISE): _UNIT_FLOAT,
        vol.Optional(CONF_SOURCE_SEED, default=DEFAULT_SOURCE_SEED): _SEED,
        vol.Optional(CONF_SOURCE_NOISE, default=DEFAULT_SOURCE_NOISE): _UNIT_FLOAT,
        vol.Optional(CONF_DATA_SEED, default=DEFAULT_DATA_SEED): _SEED,
    },
    extra=vol.PREVENT_EXTRA,
)


def validate_settings(data: Mapping[str, Any]) -> dict[str, Any]:
    """Apply PIPELINE_SCHEMA; errors name the offending key."""
    try:
        return PIPELINE_SCHEMA(dict(data))
    except vol.Invalid as err:
        raise ConfigError(f"invalid configuration: {err}") from err


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON config file holding one flat object."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot read config file {source}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {source} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"config file {source} must hold a JSON object")
    validate_settings(data)
    _LOGGER.debug("Loaded %d settings from %s", len(data), source)
    return data


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one pipeline run needs.

    ``finetune`` is None when fine-tuning is disabled (zero epochs). Missing
    ``source``/``target`` paths select the synthetic generator.
    """

    preset: str
    cut_index: int | None
    freeze_prefix: int
    pretrain: TrainConfig
    finetune: TrainConfig | None
    heads: HeadTrainConfig
    split_seed: int
    source: str | None = None
    target: str | None = None
    weights: str | None = None
    out: str | None = DEFAULT_REPORT_PATH
    model_out: str | None = None
    random_init: bool = False
    image_size: int = DEFAULT_IMAGE_SIZE
    per_class: int = DEFAULT_PER_CLASS
    noise_level: float = DEFAULT_NOISE
    source_seed: int = DEFAULT_SOURCE_SEED
    source_noise_level: float = DEFAULT_SOURCE_NOISE
    data_seed: int = DEFAULT_DATA_SEED

    @property
    def seed(self) -> int:
        return self.pretrain.seed

    @staticmethod
    def from_mapping(data: Mapping[str, Any] | None = None) -> PipelineConfig:
        """Build from flat settings, filling defaults and validating."""
        s = validate_settings(data or {})
        common = {
            "learning_rate": s[CONF_LEARNING_RATE],
            "batch_size": s[CONF_BATCH_SIZE],
            "seed": s[CONF_SEED],
        }
        finetune = None
        if s[CONF_FINETUNE_EPOCHS] > 0:
            finetune = TrainConfig(
                epochs=s[CONF_FINETUNE_EPOCHS], freeze_prefix=s[CONF_FREEZE_PREFIX], **common
            )
        return PipelineConfig(
            preset=s[CONF_PRESET],
            cut_index=s[CONF_CUT_INDEX],
            freeze_prefix=s[CONF_FREEZE_PREFIX],
            pretrain=TrainConfig(epochs=s[CONF_PRETRAIN_EPOCHS], freeze_prefix=0, **common),
            finetune=finetune,
            heads=HeadTrainConfig(
                learning_rate=s[CONF_SOFTMAX_LR],
                epochs=s[CONF_SOFTMAX_EPOCHS],
                seed=s[CONF_SEED],
                c=s[CONF_SVM_C],
                tolerance=s[CONF_SVM_TOL],
                max_passes=s[CONF_SVM_MAX_PASSES],
            ),
            split_seed=s[CONF_SPLIT_SEED],
            source=s[CONF_SOURCE],
            target=s[CONF_TARGET],
            weights=s[CONF_WEIGHTS],
            out=s[CONF_OUT],
            model_out=s[CONF_MODEL_OUT],
            random_init=s[CONF_RANDOM_INIT],
            image_size=s[CONF_IMAGE_SIZE],
            per_class=s[CONF_PER_CLASS],
            noise_level=s[CONF_NOISE],
            source_seed=s[CONF_SOURCE_SEED],
            source_noise_level=s[CONF_SOURCE_NOISE],
            data_seed=s[CONF_DATA_SEED],
        )

    @property
    def finetune_epochs(self) -> int:
        return 0 if self.finetune is None else self.finetune.epochs

    def seeds(self) -> dict[str, int]:
        """Every seed a run consumes, echoed in reports and on stdout."""
        return {
            "seed": self.seed,
            "split_seed": self.split_seed,
            "data_seed": self.data_seed,
            "source_seed": self.source_seed,
        }
