"""Finite-difference checks of reverse-mode gradients.

The loss is Σ upstream·output for a fixed random upstream tensor. Layers that
are linear in their parameters must agree on every coordinate; layers with
ReLU or max-pool kinks may disagree where a perturbation crosses a kink, so
only a large majority of sampled coordinates has to agree there.
"""

from __future__ import annotations

import numpy as np
import pytest

from trashnet_transfer.cnn_engine import NetworkSpec, TrainedNetwork, backward, forward, init_weights
from trashnet_transfer.layers import (
    Conv,
    Dense,
    Fire,
    Flatten,
    InceptionBlock,
    LayerSpec,
    MaxPool,
    Relu,
    Residual,
)
from trashnet_transfer.presets import PRESETS, preset

STEP = 1e-5
TOLERANCE = 1e-4
KINKED_PASS_FRACTION = 0.8


def _loss(net: TrainedNetwork, x: np.ndarray, upstream: np.ndarray) -> float:
    return float(np.sum(forward(net, x)[-1] * upstream))


def _param_derivative(
    net: TrainedNetwork, x: np.ndarray, upstream: np.ndarray, name: str, index: tuple
) -> float:
    params = {k: np.array(v) for k, v in net.parameters.items()}
    base = params[name][index]
    params[name][index] = base + STEP
    plus = _loss(TrainedNetwork(net.spec, params), x, upstream)
    params[name][index] = base - STEP
    minus = _loss(TrainedNetwork(net.spec, params), x, upstream)
    return (plus - minus) / (2 * STEP)


def _input_derivative(
    net: TrainedNetwork, x: np.ndarray, upstream: np.ndarray, index: tuple
) -> float:
    shifted = x.copy()
    shifted[index] = x[index] + STEP
    plus = _loss(net, shifted, upstream)
    shifted[index] = x[index] - STEP
    minus = _loss(net, shifted, upstream)
    return (plus - minus) / (2 * STEP)


def _agrees(analytic: float, numeric: float) -> bool:
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric)) <= TOLERANCE


def _sample_coordinates(net: TrainedNetwork, rng: np.random.Generator, count: int):
    names = list(net.parameters)
    coords = []
    for _ in range(count):
        name = names[rng.integers(len(names))]
        shape = net.parameters[name].shape
        coords.append((name, tuple(int(rng.integers(n)) for n in shape)))
    return coords


def _check(net: TrainedNetwork, rng: np.random.Generator, samples: int) -> float:
    """Fraction of sampled parameter and input coordinates that agree."""
    x = rng.uniform(-1.0, 1.0, size=net.spec.input_shape)
    upstream = rng.normal(size=forward(net, x)[-1].shape)
    grads, d_in = backward(net, x, upstream)

    results = []
    for name, index in _sample_coordinates(net, rng, samples):
        numeric = _param_derivative(net, x, upstream, name, index)
        results.append(_agrees(float(grads[name][index]), numeric))
    for _ in range(samples // 2):
        index = tuple(int(rng.integers(n)) for n in x.shape)
        results.append(_agrees(float(d_in[index]), _input_derivative(net, x, upstream, index)))
    return sum(results) / len(results)


LINEAR_LAYERS: dict[str, tuple[LayerSpec, ...]] = {
    "conv": (Conv(3, 3, 3), Flatten()),
    "conv-strided": (Conv(3, 3, 2, 2), Flatten()),
    "dense": (Flatten(), Dense(4)),
    "conv-dense": (Conv(2, 2, 2), Flatten(), Dense(3)),
}

KINKED_LAYERS: dict[str, tuple[LayerSpec, ...]] = {
    "relu": (Conv(3, 3, 3), Relu(), Flatten()),
    "maxpool": (Conv(3, 3, 3), MaxPool(2, 2), Flatten()),
    "maxpool-overlapping": (Conv(3, 2, 2), MaxPool(3, 1), Flatten()),
    "residual": (Conv(4, 1, 1), Residual((Conv(2, 1, 1), Relu(), Conv(4, 1, 1))), Flatten()),
    "inception": (
        InceptionBlock(((Conv(2, 1, 1),), (Conv(2, 3, 3), Relu()), (MaxPool(3, 1), Conv(2, 1, 1)))),
        Flatten(),
    ),
    "fire": (Fire(2, 3), Flatten()),
}


class TestLayerGradients:
    """Test each layer type against central differences."""

    @pytest.mark.parametrize("name", list(LINEAR_LAYERS))
    def test_linear_layers(self, name: str) -> None:
        """Test parameter-linear layers agree on every coordinate."""
        net = init_weights(NetworkSpec((2, 7, 7), LINEAR_LAYERS[name]), seed=1)
        assert _check(net, np.random.default_rng(2), 30) == 1.0

    @pytest.mark.parametrize("name", list(KINKED_LAYERS))
    def test_kinked_layers(self, name: str) -> None:
        """Test layers with kinks agree on most sampled coordinates."""
        net = init_weights(NetworkSpec((2, 7, 7), KINKED_LAYERS[name]), seed=1)
        assert _check(net, np.random.default_rng(2), 30) >= KINKED_PASS_FRACTION

    def test_every_parameter_has_a_gradient(self) -> None:
        """Test backward returns one gradient per parameter, shaped alike."""
        net = init_weights(NetworkSpec((2, 7, 7), KINKED_LAYERS["fire"]), seed=1)
        x = np.ones((2, 7, 7))
        grads, d_in = backward(net, x, np.ones(forward(net, x)[-1].shape))
        assert list(grads) == list(net.parameters)
        for name, value in net.parameters.items():
            assert grads[name].shape == value.shape
        assert d_in.shape == x.shape


class TestPresetGradients:
    """Test every preset end to end at the smallest supported input."""

    @pytest.mark.parametrize("name", list(PRESETS))
    def test_preset(self, name: str) -> None:
        """Test sampled gradients of a full preset network."""
        net = init_weights(preset(name, (3, 32, 32), 6), seed=4)
        assert _check(net, np.random.default_rng(5), 20) >= KINKED_PASS_FRACTION
