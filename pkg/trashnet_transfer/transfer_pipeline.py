"""End-to-end transfer-learning protocol.

Pretraining fits a preset network on a source dataset and writes its
weights. The comparison run loads those weights as initial values, splits
the target dataset in stratified halves, fine-tunes the unfrozen layers on
the train half, extracts features for both halves once, fits the softmax and
SVM heads on that same feature matrix, and scores both on the test half.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import numpy.typing as npt

from .classifier_heads import ClassifierHead, HeadTrainConfig, head_from_tensors, train_head
from .cnn_engine import TrainedNetwork, extract_feature_matrix, init_weights, train_network
from .config import PipelineConfig
from .const import HEAD_SVM, HEADS, KIND_FEATURES, KIND_HEAD, KIND_MODEL
from .dataset_io import LabeledDataset, SplitPair, load_any_dataset, split_half, synthesize_dataset
from .errors import ConfigError, DataError, TransferError
from .pipeline_state import PipelineEvent, PipelineStateMachine
from .presets import preset
from .report import INIT_PRETRAINED, INIT_RANDOM, EvalReport, ReportRow, feature_checksum, write_report
from .tensor_core import Tensor
from .weight_file import load_weights, network_from_parts, network_meta, read_container, save_weights, write_container

_LOGGER = logging.getLogger(__name__)

__all__ = [
    "ComparisonRun",
    "PipelineModel",
    "TransferPipeline",
    "load_features",
    "load_head",
    "load_pipeline_model",
    "run_extract",
    "run_finetune_and_compare",
    "run_pretrain",
    "run_train_head",
    "save_pipeline_model",
]


@dataclass(frozen=True)
class ComparisonRun:
    """One fine-tune/extract/train/evaluate pass for a given initialization."""

    init: str
    network: TrainedNetwork
    heads: dict[str, ClassifierHead]
    checksum: str
    rows: list[ReportRow]


@dataclass(frozen=True)
class PipelineModel:
    """Fine-tuned extractor plus both trained heads."""

    network: TrainedNetwork
    heads: dict[str, ClassifierHead]
    class_names: tuple[str, ...]

    def predict(self, images: npt.ArrayLike, head: str = HEAD_SVM) -> npt.NDArray[np.int64]:
        """Class indices for an N×3×H×W image stack."""
        if head not in self.heads:
            raise ConfigError(f"model has no {head!r} head")
        features = extract_feature_matrix(self.network, images)
        return self.heads[head].predict_many(features)


def _with_cut_index(net: TrainedNetwork, cut_index: int | None) -> TrainedNetwork:
    if cut_index is None or cut_index == net.spec.cut_index:
        return net
    return TrainedNetwork(net.spec.with_cut_index(cut_index), net.parameters, net.provenance)


def _warn_on_preset_mismatch(name: str, net: TrainedNetwork) -> None:
    try:
        expected = preset(name, net.spec.input_shape, net.spec.class_count or 2)
    except TransferError:
        expected = None
    if expected is None or expected.layers != net.spec.layers:
        _LOGGER.warning(
            "Loaded weights were not built from preset %s; rows are still labelled %s", name, name
        )


def load_source_dataset(cfg: PipelineConfig) -> LabeledDataset:
    """Source dataset from --source, or the synthetic generator with source settings."""
    if cfg.source is not None:
        return load_any_dataset(cfg.source, cfg.image_size, cfg.image_size)
    return synthesize_dataset(
        per_class=cfg.per_class,
        image_size=cfg.image_size,
        noise_level=cfg.source_noise_level,
        seed=cfg.source_seed,
    )


def load_target_dataset(cfg: PipelineConfig) -> LabeledDataset:
    """Target dataset from --target, or the synthetic generator with data settings."""
    if cfg.target is not None:
        return load_any_dataset(cfg.target, cfg.image_size, cfg.image_size)
    return synthesize_dataset(
        per_class=cfg.per_class,
        image_size=cfg.image_size,
        noise_level=cfg.noise_level,
        seed=cfg.data_seed,
    )


class TransferPipeline:
    """Single-use runner for one pretraining or comparison run."""

    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self._machine = PipelineStateMachine()
        self._report: EvalReport | None = None

    @property
    def state(self) -> str:
        return self._machine.current_state

    @property
    def state_machine(self) -> PipelineStateMachine:
        return self._machine

    @property
    def stages(self) -> list[str]:
        return self._machine.history

    @contextmanager
    def _stage(self, event: PipelineEvent | None) -> Iterator[None]:
        """Enter the stage reached by ``event`` (None stays put) and mark failures."""
        if event is not None and not self._machine.transition(event):
            raise TransferError(
                f"pipeline cannot {event.value} from stage {self._machine.current_state}"
                " (pipelines are single-use)"
            )
        try:
            yield
        except Exception as err:
            if isinstance(err, TransferError) and err.stage is None:
                err.stage = self._machine.current_state
            _LOGGER.error("Stage %s failed: %s", self._machine.current_state, err)
            self._machine.transition(PipelineEvent.FAIL)
            raise

    def _weights_path(self) -> Path:
        if self.config.weights is None:
            raise ConfigError("a weight file path is required (--weights)")
        return Path(self.config.weights)

    # Pretraining

    def run_pretrain(self) -> Path:
        """Train the preset on the source dataset and write its weights."""
        cfg = self.config
        with self._stage(PipelineEvent.LOAD):
            path = self._weights_path()
            source = load_source_dataset(cfg)
            spec = preset(cfg.preset, source.image_shape, source.class_count)
            if cfg.cut_index is not None:
                spec = spec.with_cut_index(cfg.cut_index)
            net = init_weights(spec, cfg.seed, f"{cfg.preset}:init(seed={cfg.seed})")

        with self._stage(PipelineEvent.PRETRAIN):
            _LOGGER.info(
                "Pretraining %s on %s (%d samples)", cfg.preset, source.provenance, len(source)
            )
            run = train_network(net, source, cfg.pretrain)
            trained = TrainedNetwork(
                run.network.spec, run.network.parameters, f"pretrain:{run.network.provenance}"
            )
            written = save_weights(trained, path)

        self._machine.transition(PipelineEvent.FINISH)
        return written

    # Comparison

    def _run_once(
        self, net: TrainedNetwork, split: SplitPair, init: str, event: PipelineEvent
    ) -> ComparisonRun:
        cfg = self.config
        k = split.train.class_count
        with self._stage(event):
            if cfg.finetune is not None:
                net = train_network(net, split.train, cfg.finetune, class_count=k).network
            else:
                _LOGGER.info("Fine-tuning disabled; using %s weights as loaded", init)

        with self._stage(PipelineEvent.EXTRACT):
            train_x = extract_feature_matrix(net, split.train.images)
            test_x = extract_feature_matrix(net, split.test.images)
            checksum = feature_checksum(train_x, test_x)
            _LOGGER.info(
                "Extracted %d-dim features for %d + %d samples (sha256 %s)",
                train_x.shape[1],
                train_x.shape[0],
                test_x.shape[0],
                checksum[:12],
            )

        with self._stage(PipelineEvent.TRAIN_HEADS):
            heads = {
                name: train_head(name, train_x, split.train.labels, cfg.heads, k) for name in HEADS
            }

        with self._stage(PipelineEvent.EVALUATE):
            rows = []
            for name, head in heads.items():
                row = ReportRow.evaluate(
                    model=cfg.preset,
                    head=name,
                    predictions=head.predict_many(test_x),
                    labels=split.test.labels,
                    class_names=split.test.class_names,
                    epochs=cfg.finetune_epochs,
                    init=init,
                    checksum=checksum,
                )
                _LOGGER.info("%s %s (%s init): %.2f%%", cfg.preset, name, init, row.accuracy_pct)
                rows.append(row)

        return ComparisonRun(init, net, heads, checksum, rows)

    def run_finetune_and_compare(self) -> EvalReport:
        """Fine-tune, extract shared features, train and score both heads."""
        cfg = self.config
        with self._stage(PipelineEvent.LOAD):
            net = _with_cut_index(load_weights(self._weights_path()), cfg.cut_index)
            target = load_target_dataset(cfg)
            _warn_on_preset_mismatch(cfg.preset, net)
            if target.image_shape != net.spec.input_shape:
                raise DataError(
                    f"target images are {target.image_shape}, network expects {net.spec.input_shape}"
                )
            if cfg.freeze_prefix > net.spec.layer_count:
                raise ConfigError(
                    f"freeze_prefix {cfg.freeze_prefix} exceeds layer count {net.spec.layer_count}"
                )

        with self._stage(PipelineEvent.SPLIT):
            split = split_half(target, cfg.split_seed)

        runs = [self._run_once(net, split, INIT_PRETRAINED, PipelineEvent.FINE_TUNE)]
        if cfg.random_init:
            fresh = init_weights(net.spec, cfg.seed, f"random-init(seed={cfg.seed})")
            runs.append(self._run_once(fresh, split, INIT_RANDOM, PipelineEvent.FINE_TUNE))

        primary = runs[0]
        report = EvalReport(
            rows=[row for run in runs for row in run.rows],
            split_seed=cfg.split_seed,
            feature_checksum=primary.checksum,
            counts={"train": len(split.train), "test": len(split.test)},
            seeds=cfg.seeds(),
        )

        with self._stage(None):
            if cfg.model_out is not None:
                save_pipeline_model(
                    PipelineModel(primary.network, primary.heads, target.class_names),
                    cfg.model_out,
                )
            if cfg.out is not None:
                write_report(report, cfg.out)
        self._machine.transition(PipelineEvent.FINISH)
        self._report = report
        return report

    def get_info(self) -> dict[str, Any]:
        """Get pipeline diagnostic info."""
        info: dict[str, Any] = {
            "preset": self.config.preset,
            "stage": self._machine.get_info(),
            "seeds": self.config.seeds(),
        }
        if self._report is not None:
            info["accuracies"] = {
                f"{row.head}/{row.init}": row.accuracy_pct for row in self._report.rows
            }
        return info


def run_pretrain(config: PipelineConfig) -> Path:
    return TransferPipeline(config).run_pretrain()


def run_finetune_and_compare(config: PipelineConfig) -> EvalReport:
    return TransferPipeline(config).run_finetune_and_compare()


# Model, feature and head files


def save_pipeline_model(model: PipelineModel, path: str | Path) -> Path:
    """Write the extractor and both heads to one container."""
    tensors: dict[str, Tensor] = {
        f"network.{name}": value for name, value in model.network.parameters.items()
    }
    head_meta = {}
    for name, head in model.heads.items():
        meta, head_tensors = head.to_tensors()
        head_meta[name] = meta
        tensors.update({f"{name}.{key}": value for key, value in head_tensors.items()})
    meta = {
        "network": network_meta(model.network),
        "heads": head_meta,
        "class_names": list(model.class_names),
    }
    return write_container(path, KIND_MODEL, meta, tensors)


def _strip(tensors: dict[str, Tensor], prefix: str) -> dict[str, Tensor]:
    return {k[len(prefix) :]: v for k, v in tensors.items() if k.startswith(prefix)}


def load_pipeline_model(path: str | Path) -> PipelineModel:
    container = read_container(path, KIND_MODEL)
    try:
        network = network_from_parts(
            container.meta["network"], _strip(container.tensors, "network.")
        )
        heads = {
            name: head_from_tensors(meta, _strip(container.tensors, f"{name}."))
            for name, meta in container.meta["heads"].items()
        }
        names = tuple(container.meta["class_names"])
    except KeyError as err:
        raise DataError(f"{path}: model file lacks {err}") from err
    return PipelineModel(network, heads, names)


def run_extract(
    weights: str | Path, dataset: LabeledDataset, out: str | Path, cut_index: int | None = None
) -> Path:
    """Write the feature matrix and labels of ``dataset`` to a container."""
    net = _with_cut_index(load_weights(weights), cut_index)
    if dataset.image_shape != net.spec.input_shape:
        raise DataError(f"images are {dataset.image_shape}, network expects {net.spec.input_shape}")
    features = extract_feature_matrix(net, dataset.images)
    meta = {
        "class_names": list(dataset.class_names),
        "provenance": dataset.provenance,
        "network": net.provenance,
        "cut_index": net.spec.cut_index,
    }
    tensors = {"features": features, "labels": dataset.labels.astype(np.float64)}
    return write_container(out, KIND_FEATURES, meta, tensors)


def load_features(path: str | Path) -> tuple[Tensor, npt.NDArray[np.int64], tuple[str, ...]]:
    container = read_container(path, KIND_FEATURES)
    try:
        features = container.tensors["features"]
        labels = container.tensors["labels"].astype(np.int64)
        names = tuple(container.meta["class_names"])
    except KeyError as err:
        raise DataError(f"{path}: feature file lacks {err}") from err
    return features, labels, names


def run_train_head(
    features_path: str | Path, head: str, config: HeadTrainConfig, out: str | Path
) -> tuple[Path, ClassifierHead]:
    """Fit one head on a feature file and store it."""
    features, labels, names = load_features(features_path)
    trained = train_head(head, features, labels, config, len(names))
    meta, tensors = trained.to_tensors()
    meta["class_names"] = list(names)
    return write_container(out, KIND_HEAD, meta, tensors), trained


def load_head(path: str | Path) -> ClassifierHead:
    container = read_container(path, KIND_HEAD)
    return head_from_tensors(container.meta, container.tensors)

