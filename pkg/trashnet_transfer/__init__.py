"""Transfer learning with softmax and SVM heads on desk-scale CNNs."""

from __future__ import annotations

import logging

from .classifier_heads import HeadTrainConfig, SoftmaxHead, SvmHead, train_head
from .cnn_engine import NetworkSpec, TrainConfig, TrainedNetwork, init_weights, sgd_train
from .config import PipelineConfig
from .const import DOMAIN
from .dataset_io import LabeledDataset, load_dataset, split_half, synthesize_dataset
from .errors import TransferError
from .presets import preset
from .report import EvalReport
from .transfer_pipeline import TransferPipeline, run_finetune_and_compare, run_pretrain
from .weight_file import load_weights, save_weights

logging.getLogger(DOMAIN).addHandler(logging.NullHandler())

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "HeadTrainConfig",
    "LabeledDataset",
    "NetworkSpec",
    "PipelineConfig",
    "SoftmaxHead",
    "SvmHead",
    "TrainConfig",
    "TrainedNetwork",
    "TransferError",
    "TransferPipeline",
    "init_weights",
    "load_dataset",
    "load_weights",
    "preset",
    "run_finetune_and_compare",
    "run_pretrain",
    "save_weights",
    "sgd_train",
    "split_half",
    "synthesize_dataset",
    "train_head",
]
