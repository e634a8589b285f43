"""Desk-scale network presets, one per architecture family.

Each preset keeps its family's signature mechanism at a size that trains on a
laptop: a plain conv stack, a deep 3×3 stack, residual connections, an
inception block and fire modules. All presets end in Dense(64)+ReLU, which is
where the default cut index points.
"""

from __future__ import annotations

import logging
from typing import Callable

from .cnn_engine import NetworkSpec
from .errors import ConfigError, SpecError
from .layers import Conv, Dense, Fire, Flatten, InceptionBlock, LayerSpec, MaxPool, Relu, Residual, Shape

_LOGGER = logging.getLogger(__name__)

MIN_INPUT_EXTENT = 32
FEATURE_WIDTH = 64


def _head() -> list[LayerSpec]:
    return [Flatten(), Dense(FEATURE_WIDTH), Relu()]


def _stem() -> list[LayerSpec]:
    return [Conv(16, 5, 5, 2), Relu(), MaxPool(2, 2)]


def _alexnet_mini() -> list[LayerSpec]:
    return [*_stem(), Conv(32, 3, 3, 1), Relu(), MaxPool(2, 2), *_head()]


def _vgg_mini() -> list[LayerSpec]:
    return [
        Conv(16, 3, 3, 1),
        Relu(),
        Conv(16, 3, 3, 1),
        Relu(),
        MaxPool(2, 2),
        Conv(32, 3, 3, 1),
        Relu(),
        Conv(32, 3, 3, 1),
        Relu(),
        MaxPool(2, 2),
        *_head(),
    ]


def _bottleneck() -> Residual:
    return Residual((Conv(16, 1, 1), Relu(), Conv(32, 1, 1)))


def _resnet_mini() -> list[LayerSpec]:
    return [
        *_stem(),
        Conv(32, 3, 3, 1),
        Relu(),
        _bottleneck(),
        Relu(),
        _bottleneck(),
        Relu(),
        MaxPool(2, 2),
        *_head(),
    ]


def _googlenet_mini() -> list[LayerSpec]:
    inception = InceptionBlock(
        (
            (Conv(8, 1, 1), Relu()),
            (Conv(8, 1, 1), Relu(), Conv(8, 3, 3), Relu()),
            (Conv(4, 1, 1), Relu(), Conv(8, 5, 5), Relu()),
            (MaxPool(3, 1), Conv(8, 1, 1), Relu()),
        )
    )
    return [*_stem(), inception, MaxPool(2, 2), *_head()]


def _squeezenet_mini() -> list[LayerSpec]:
    return [*_stem(), Fire(8, 16), Fire(8, 16), MaxPool(2, 2), *_head()]


PRESETS: dict[str, Callable[[], list[LayerSpec]]] = {
    "alexnet-mini": _alexnet_mini,
    "vgg-mini": _vgg_mini,
    "googlenet-mini": _googlenet_mini,
    "resnet-mini": _resnet_mini,
    "squeezenet-mini": _squeezenet_mini,
}

# Row labels used in comparison tables
PRESET_TITLES = {
    "alexnet-mini": "AlexNet",
    "vgg-mini": "VGG",
    "googlenet-mini": "GoogleNet",
    "resnet-mini": "ResNet",
    "squeezenet-mini": "SqueezeNet",
}


def preset_names() -> list[str]:
    return list(PRESETS)


def preset(name: str, input_shape: Shape, class_count: int) -> NetworkSpec:
    """Build and validate the named preset for ``input_shape``."""
    builder = PRESETS.get(name)
    if builder is None:
        raise ConfigError(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}")
    if len(input_shape) != 3:
        raise SpecError(f"preset input must be C×H×W, got {tuple(input_shape)}")
    if min(input_shape[1:]) < MIN_INPUT_EXTENT:
        raise SpecError(
            f"preset {name} needs spatial dims >= {MIN_INPUT_EXTENT}, got {tuple(input_shape)}"
        )
    if class_count < 2:
        raise ConfigError(f"class_count must be >= 2, got {class_count}")
    layers = builder()
    spec = NetworkSpec(tuple(input_shape), tuple(layers), len(layers) - 1, class_count)
    spec.validate()
    _LOGGER.debug("Built preset %s: %d layers, %d features", name, len(layers), spec.feature_dim)
    return spec
