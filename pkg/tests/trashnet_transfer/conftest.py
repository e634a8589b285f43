"""Fixtures for transfer-learning toolkit tests."""

from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from trashnet_transfer.cnn_engine import NetworkSpec, TrainedNetwork, init_weights
from trashnet_transfer.const import (
    CONF_BATCH_SIZE,
    CONF_FINETUNE_EPOCHS,
    CONF_IMAGE_SIZE,
    CONF_PER_CLASS,
    CONF_PRETRAIN_EPOCHS,
    CONF_SOFTMAX_EPOCHS,
)
from trashnet_transfer.dataset_io import LabeledDataset, synthesize_dataset
from trashnet_transfer.layers import Conv, Dense, Flatten, MaxPool, Relu


@pytest.fixture
def tiny_spec() -> NetworkSpec:
    """Return a small conv network on 3×8×8 inputs with 5 features."""
    return NetworkSpec(
        (3, 8, 8),
        (Conv(4, 3, 3), Relu(), MaxPool(2, 2), Flatten(), Dense(5), Relu()),
        class_count=3,
    )


@pytest.fixture
def tiny_net(tiny_spec: NetworkSpec) -> TrainedNetwork:
    """Return the tiny network with seeded weights."""
    return init_weights(tiny_spec, seed=3)


@pytest.fixture
def tiny_dataset() -> LabeledDataset:
    """Return a 3-class synthetic dataset of 8×8 images."""
    return synthesize_dataset(k=3, per_class=6, image_size=8, noise_level=0.05, seed=11)


@pytest.fixture
def small_dataset() -> LabeledDataset:
    """Return a 6-class synthetic dataset of 32×32 images."""
    return synthesize_dataset(per_class=6, image_size=32, noise_level=0.05, seed=5)


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded generator."""
    return np.random.default_rng(20240601)


@pytest.fixture
def fast_settings() -> dict[str, Any]:
    """Return pipeline settings small enough for a quick run."""
    return {
        CONF_IMAGE_SIZE: 32,
        CONF_PER_CLASS: 6,
        CONF_PRETRAIN_EPOCHS: 1,
        CONF_FINETUNE_EPOCHS: 1,
        CONF_SOFTMAX_EPOCHS: 20,
        CONF_BATCH_SIZE: 8,
    }
