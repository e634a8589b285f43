"""Network specification, forward/backward passes and SGD training.

A NetworkSpec is an ordered list of layers plus a cut index; the flattened
activation after the cut layer is the feature vector handed to a classifier
head. A TrainedNetwork pairs a spec with its parameters and is never mutated:
training returns a new network.

Parameters are keyed ``"<layer index>.<name>"`` (nested layers add their own
path, e.g. ``"9.inner.0.weight"``), which is what freeze_prefix filters on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Protocol

import numpy as np
import numpy.typing as npt

from .classifier_heads import softmax_cross_entropy
from .errors import ConfigError, DomainError, ShapeInconsistencyError, SpecError, TrainingError
from .layers import (
    LayerSpec,
    ParamInfo,
    Shape,
    layer_from_dict,
    param_count,
    sequence_backward,
    sequence_forward,
    sequence_param_info,
    sequence_shapes,
)
from .tensor_core import Tensor

_LOGGER = logging.getLogger(__name__)

__all__ = [
    "EpochStats",
    "NetworkSpec",
    "TrainConfig",
    "TrainedNetwork",
    "TrainingRun",
    "backward",
    "extract_features",
    "extract_feature_matrix",
    "forward",
    "infer_shapes",
    "init_weights",
    "sgd_train",
    "train_network",
]


@dataclass(frozen=True)
class NetworkSpec:
    """Input shape, ordered layers and the feature cut point.

    cut_index defaults to the last layer. class_count optionally records the
    width of the classification head the network was designed for.
    """

    input_shape: Shape
    layers: tuple[LayerSpec, ...]
    cut_index: int | None = None
    class_count: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.cut_index is None:
            object.__setattr__(self, "cut_index", len(self.layers) - 1)
        if any(d < 1 for d in self.input_shape):
            raise SpecError(f"input dimensions must be positive, got {self.input_shape}")

    @property
    def layer_count(self) -> int:
        return len(self.layers)

    def with_cut_index(self, cut_index: int) -> NetworkSpec:
        """Copy of this spec with a different cut point."""
        spec = NetworkSpec(self.input_shape, self.layers, cut_index, self.class_count)
        spec.validate()
        return spec

    def validate(self, require_features: bool = True) -> list[Shape]:
        """Check shape inference, the cut range and the rank-1 final output."""
        shapes = infer_shapes(self)
        assert self.cut_index is not None
        if not 0 <= self.cut_index < self.layer_count:
            raise SpecError(
                f"cut_index {self.cut_index} outside 0..{self.layer_count - 1}"
            )
        if require_features and len(shapes[-1]) != 1:
            raise SpecError(
                f"final layer must produce a rank-1 feature vector, got {shapes[-1]}",
                self.layer_count - 1,
            )
        return shapes

    def param_info(self) -> dict[str, ParamInfo]:
        """Every parameter tensor in declaration order."""
        return sequence_param_info(self.layers, self.input_shape)

    @property
    def feature_dim(self) -> int:
        """Length of the flattened activation at cut_index."""
        assert self.cut_index is not None
        return math.prod(infer_shapes(self)[self.cut_index])

    @property
    def output_dim(self) -> int:
        """Length of the flattened final activation."""
        return math.prod(infer_shapes(self)[-1])

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_shape": list(self.input_shape),
            "layers": [layer.to_dict() for layer in self.layers],
            "cut_index": self.cut_index,
            "class_count": self.class_count,
        }

    @staticmethod
    def from_dict(data: Mapping[str, Any]) -> NetworkSpec:
        try:
            return NetworkSpec(
                input_shape=tuple(data["input_shape"]),
                layers=tuple(layer_from_dict(layer) for layer in data["layers"]),
                cut_index=data.get("cut_index"),
                class_count=data.get("class_count"),
            )
        except (KeyError, TypeError) as err:
            raise SpecError(f"malformed network spec: {err}") from err


def infer_shapes(spec: NetworkSpec) -> list[Shape]:
    """Output shape after every layer of ``spec``."""
    return sequence_shapes(spec.layers, spec.input_shape)


def layer_of(param_name: str) -> int:
    """Index of the top-level layer owning a parameter."""
    return int(param_name.split(".", 1)[0])


def check_parameters(spec: NetworkSpec, parameters: Mapping[str, Tensor]) -> None:
    """Raise ShapeInconsistencyError unless names and shapes match the spec."""
    expected = spec.param_info()
    if list(parameters) != list(expected):
        raise ShapeInconsistencyError(
            f"parameter names {list(parameters)} do not match spec {list(expected)}"
        )
    for name, info in expected.items():
        shape = tuple(np.shape(parameters[name]))
        if shape != info.shape:
            raise ShapeInconsistencyError(
                f"parameter {name} has shape {shape}, spec requires {info.shape}"
            )


def _frozen_copy(value: npt.ArrayLike) -> Tensor:
    arr = np.array(value, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TrainedNetwork:
    """A network spec with its learned parameters."""

    spec: NetworkSpec
    parameters: Mapping[str, Tensor]
    provenance: str = ""

    def __post_init__(self) -> None:
        params = {name: _frozen_copy(value) for name, value in self.parameters.items()}
        check_parameters(self.spec, params)
        for name, value in params.items():
            if not np.all(np.isfinite(value)):
                raise DomainError(f"parameter {name} contains non-finite values")
        object.__setattr__(self, "parameters", params)

    def __eq__(self, other: object) -> bool:
        """Bit-exact equality of spec, provenance and every parameter."""
        if not isinstance(other, TrainedNetwork):
            return NotImplemented
        if self.spec != other.spec or self.provenance != other.provenance:
            return False
        if list(self.parameters) != list(other.parameters):
            return False
        return all(
            self.parameters[name].tobytes() == other.parameters[name].tobytes()
            for name in self.parameters
        )

    __hash__ = None  # type: ignore[assignment]

    def layer_parameters(self, index: int) -> dict[str, Tensor]:
        """Parameters owned by top-level layer ``index``."""
        return {k: v for k, v in self.parameters.items() if layer_of(k) == index}

    def get_info(self) -> dict[str, Any]:
        """Get network diagnostic info."""
        return {
            "provenance": self.provenance,
            "input_shape": list(self.spec.input_shape),
            "layers": [layer.kind for layer in self.spec.layers],
            "cut_index": self.spec.cut_index,
            "feature_dim": self.spec.feature_dim,
            "parameter_tensors": len(self.parameters),
            "parameter_count": param_count(self.spec.param_info()),
        }


def init_weights(spec: NetworkSpec, seed: int, provenance: str | None = None) -> TrainedNetwork:
    """Uniform(-b, b) weights with b = sqrt(6 / fan_in); zero biases."""
    infer_shapes(spec)
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    for name, info in spec.param_info().items():
        if info.is_bias:
            params[name] = np.zeros(info.shape, dtype=np.float64)
        else:
            bound = math.sqrt(6.0 / info.fan_in)
            params[name] = rng.uniform(-bound, bound, size=info.shape)
    return TrainedNetwork(spec, params, provenance or f"init(seed={seed})")


def _check_input(spec: NetworkSpec, x: Tensor, batched: bool) -> None:
    shape = tuple(x.shape[1:] if batched else x.shape)
    if shape != spec.input_shape:
        raise DomainError(f"input shape {shape} does not match network input {spec.input_shape}")


def forward(net: TrainedNetwork, inp: npt.ArrayLike) -> list[Tensor]:
    """Activations of every layer for one C×H×W input."""
    x = np.asarray(inp, dtype=np.float64)
    _check_input(net.spec, x, batched=False)
    activations, _ = sequence_forward(net.spec.layers, net.parameters, x[None])
    return [a[0] for a in activations]


def extract_features(net: TrainedNetwork, inp: npt.ArrayLike) -> Tensor:
    """Flattened activation at the cut index for one input."""
    x = np.asarray(inp, dtype=np.float64)
    _check_input(net.spec, x, batched=False)
    return extract_feature_matrix(net, x[None])[0]


def extract_feature_matrix(
    net: TrainedNetwork, inputs: npt.ArrayLike, batch_size: int = 32
) -> Tensor:
    """Feature vectors for a stack of inputs, one row per input."""
    xs = np.asarray(inputs, dtype=np.float64)
    _check_input(net.spec, xs, batched=True)
    assert net.spec.cut_index is not None
    stop = net.spec.cut_index + 1
    rows = []
    for start in range(0, xs.shape[0], batch_size):
        activations, _ = sequence_forward(
            net.spec.layers, net.parameters, xs[start : start + batch_size], stop=stop
        )
        rows.append(activations[-1].reshape(activations[-1].shape[0], -1))
    if not rows:
        return np.zeros((0, net.spec.feature_dim), dtype=np.float64)
    return np.concatenate(rows, axis=0)


def backward(
    net: TrainedNetwork, inp: npt.ArrayLike, upstream_gradient: npt.ArrayLike
) -> tuple[dict[str, Tensor], Tensor]:
    """Reverse-mode gradients of Σ upstream·final_activation.

    Every layer produces gradients, frozen or not.
    """
    x = np.asarray(inp, dtype=np.float64)
    _check_input(net.spec, x, batched=False)
    activations, caches = sequence_forward(net.spec.layers, net.parameters, x[None])
    grad = np.asarray(upstream_gradient, dtype=np.float64)
    if grad.shape != activations[-1].shape[1:]:
        raise DomainError(
            f"upstream gradient shape {grad.shape} does not match output {activations[-1].shape[1:]}"
        )
    d_in, grads = sequence_backward(net.spec.layers, net.parameters, caches, grad[None])
    ordered = {name: grads[name] for name in net.parameters}
    return ordered, d_in[0]


# Training


@dataclass(frozen=True)
class TrainConfig:
    """SGD settings for network pretraining and fine-tuning."""

    learning_rate: float
    epochs: int
    batch_size: int
    seed: int
    freeze_prefix: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate >= 0 or not math.isfinite(self.learning_rate):
            raise ConfigError(f"learning_rate must be a finite value >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.freeze_prefix < 0:
            raise ConfigError(f"freeze_prefix must be >= 0, got {self.freeze_prefix}")


class TrainingSet(Protocol):
    """Anything exposing a stacked image array and integer labels."""

    @property
    def images(self) -> Tensor: ...

    @property
    def labels(self) -> npt.NDArray[np.int64]: ...

    @property
    def class_count(self) -> int: ...


@dataclass(frozen=True)
class EpochStats:
    """Mean loss and accuracy over one epoch."""

    epoch: int
    loss: float
    accuracy: float


@dataclass(frozen=True)
class TrainingRun:
    """Result of train_network: the network, its temporary head and history."""

    network: TrainedNetwork
    head_weight: Tensor
    head_bias: Tensor
    history: list[EpochStats] = field(default_factory=list)


def _init_head(rng: np.random.Generator, class_count: int, dim: int) -> tuple[Tensor, Tensor]:
    bound = math.sqrt(6.0 / dim)
    return rng.uniform(-bound, bound, size=(class_count, dim)), np.zeros(class_count)


def train_network(
    net: TrainedNetwork,
    dataset: TrainingSet,
    config: TrainConfig,
    class_count: int | None = None,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> TrainingRun:
    """Minibatch SGD on softmax cross-entropy through a temporary Dense head.

    Layers with index < freeze_prefix are never updated. Shuffling and head
    initialization derive from config.seed only, so identical inputs give
    bit-identical results.
    """
    spec = net.spec
    if config.freeze_prefix > spec.layer_count:
        raise ConfigError(
            f"freeze_prefix {config.freeze_prefix} exceeds layer count {spec.layer_count}"
        )
    images = np.asarray(dataset.images, dtype=np.float64)
    labels = np.asarray(dataset.labels, dtype=np.int64)
    if images.shape[0] == 0:
        raise ConfigError("cannot train on an empty dataset")
    _check_input(spec, images, batched=True)
    k = class_count or spec.class_count or dataset.class_count
    if labels.min() < 0 or labels.max() >= k:
        raise ConfigError(f"labels must lie in 0..{k - 1}")

    head_seq, shuffle_seq = np.random.SeedSequence(config.seed).spawn(2)
    head_w, head_b = _init_head(np.random.default_rng(head_seq), k, spec.output_dim)
    shuffle_rng = np.random.default_rng(shuffle_seq)

    params: dict[str, Tensor] = dict(net.parameters)
    trainable = [name for name in params if layer_of(name) >= config.freeze_prefix]
    lr = config.learning_rate
    n = images.shape[0]
    history: list[EpochStats] = []

    _LOGGER.info(
        "Training %d samples for %d epochs (lr=%g, batch=%d, seed=%d, frozen layers=%d)",
        n,
        config.epochs,
        lr,
        config.batch_size,
        config.seed,
        config.freeze_prefix,
    )

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for batch, start in enumerate(range(0, n, config.batch_size), start=1):
            idx = order[start : start + config.batch_size]
            activations, caches = sequence_forward(spec.layers, params, images[idx])
            out = activations[-1]
            feats = out.reshape(out.shape[0], -1)
            logits = feats @ head_w.T + head_b
            loss, grad_logits = softmax_cross_entropy(logits, labels[idx])
            if not math.isfinite(loss):
                raise TrainingError("non-finite training loss", epoch, batch)
            loss_sum += loss * len(idx)
            correct += int(np.sum(np.argmax(logits, axis=1) == labels[idx]))

            d_feats = grad_logits @ head_w
            head_w = head_w - lr * (grad_logits.T @ feats)
            head_b = head_b - lr * grad_logits.sum(axis=0)
            if trainable:
                _, grads = sequence_backward(
                    spec.layers,
                    params,
                    caches,
                    d_feats.reshape(out.shape),
                    stop_at=config.freeze_prefix,
                )
                for name in trainable:
                    params[name] = params[name] - lr * grads[name]

        stats = EpochStats(epoch, loss_sum / n, 100.0 * correct / n)
        history.append(stats)
        _LOGGER.info(
            "Epoch %d/%d: loss=%.4f accuracy=%.2f%%",
            epoch,
            config.epochs,
            stats.loss,
            stats.accuracy,
        )
        if on_epoch is not None:
            on_epoch(stats)

    for name, value in params.items():
        if not np.all(np.isfinite(value)):
            raise TrainingError(f"parameter {name} became non-finite", config.epochs, 0)

    provenance = (
        f"{net.provenance}+sgd(epochs={config.epochs},lr={lr:g},"
        f"seed={config.seed},freeze={config.freeze_prefix})"
    )
    trained = TrainedNetwork(spec, params, provenance)
    return TrainingRun(trained, head_w, head_b, history)


def sgd_train(
    net: TrainedNetwork,
    dataset: TrainingSet,
    config: TrainConfig,
    class_count: int | None = None,
) -> TrainedNetwork:
    """Train and return only the updated network."""
    return train_network(net, dataset, config, class_count).network
