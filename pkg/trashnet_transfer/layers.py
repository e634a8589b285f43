"""Layer specifications for the feature-extraction network.

Each layer is a frozen dataclass that knows its output shape, the parameters
it owns and how to run forward and backward on a minibatch. Shapes never
include the batch axis; activations passed to ``forward``/``backward`` always
do.

To add a new layer type:
1. Create a dataclass inheriting from LayerSpec with a unique ``kind``
2. Implement output_shape(), forward() and backward()
3. Override param_info() if the layer owns parameters
4. Register it in _LAYER_KINDS so it round-trips through weight files
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from typing import Any, ClassVar, Mapping, Sequence

import numpy as np

from . import tensor_core as tc
from .errors import DomainError, SpecError
from .tensor_core import Tensor

_LOGGER = logging.getLogger(__name__)

Shape = tuple[int, ...]
Params = Mapping[str, Tensor]
Grads = dict[str, Tensor]


@dataclass(frozen=True)
class ParamInfo:
    """Shape of one parameter tensor and the fan-in used to initialize it.

    Biases have fan_in 0 and are initialized to zero.
    """

    shape: Shape
    fan_in: int

    @property
    def is_bias(self) -> bool:
        return self.fan_in == 0


def _require_positive(layer: str, **values: int) -> None:
    for name, value in values.items():
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise SpecError(f"{layer} {name} must be a positive integer, got {value!r}")


def _require_rank(layer: str, in_shape: Shape, rank: int) -> None:
    if len(in_shape) != rank:
        raise SpecError(f"{layer} expects a rank-{rank} input, got shape {in_shape}")


def _scope(params: Params, prefix: str) -> dict[str, Tensor]:
    """Parameters under ``prefix`` with the prefix stripped."""
    return {k[len(prefix) :]: v for k, v in params.items() if k.startswith(prefix)}


class LayerSpec(ABC):
    """Abstract base class for network layers."""

    kind: ClassVar[str]

    @abstractmethod
    def output_shape(self, in_shape: Shape) -> Shape:
        """Shape produced for an input of ``in_shape`` or raise SpecError."""

    def param_info(self, in_shape: Shape) -> dict[str, ParamInfo]:
        """Parameters owned by this layer, in declaration order."""
        return {}

    @abstractmethod
    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        """Run on a minibatch; return the output and a cache for backward."""

    @abstractmethod
    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        """Return the input gradient and the parameter gradients."""

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        data: dict[str, Any] = {"kind": self.kind}
        for f in fields(self):  # type: ignore[arg-type]
            data[f.name] = getattr(self, f.name)
        return data


@dataclass(frozen=True)
class Conv(LayerSpec):
    """Valid-mode multi-channel convolution (no activation)."""

    kind: ClassVar[str] = "conv"

    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int = 1

    def __post_init__(self) -> None:
        _require_positive(
            "Conv",
            out_channels=self.out_channels,
            kernel_h=self.kernel_h,
            kernel_w=self.kernel_w,
            stride=self.stride,
        )

    def output_shape(self, in_shape: Shape) -> Shape:
        _require_rank("Conv", in_shape, 3)
        _, h, w = in_shape
        try:
            oh = tc.conv_output_length(h, self.kernel_h, self.stride)
            ow = tc.conv_output_length(w, self.kernel_w, self.stride)
        except DomainError as err:
            raise SpecError(f"Conv: {err}") from err
        return (self.out_channels, oh, ow)

    def param_info(self, in_shape: Shape) -> dict[str, ParamInfo]:
        c_in = in_shape[0]
        return {
            "weight": ParamInfo(
                (self.out_channels, c_in, self.kernel_h, self.kernel_w),
                c_in * self.kernel_h * self.kernel_w,
            ),
            "bias": ParamInfo((self.out_channels,), 0),
        }

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        y = tc.conv_valid_2d(x, params["weight"], params["bias"], self.stride)
        return y, x

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        d_in, d_w, d_b = tc.conv_valid_2d_backward(cache, params["weight"], grad, self.stride)
        return d_in, {"weight": d_w, "bias": d_b}


@dataclass(frozen=True)
class Relu(LayerSpec):
    """Elementwise rectifier."""

    kind: ClassVar[str] = "relu"

    def output_shape(self, in_shape: Shape) -> Shape:
        return tuple(in_shape)

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        return tc.relu(x), x

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        return tc.relu_backward(cache, grad), {}


@dataclass(frozen=True)
class MaxPool(LayerSpec):
    """Valid-mode max pooling."""

    kind: ClassVar[str] = "maxpool"

    window: int
    stride: int = 1

    def __post_init__(self) -> None:
        _require_positive("MaxPool", window=self.window, stride=self.stride)

    def output_shape(self, in_shape: Shape) -> Shape:
        _require_rank("MaxPool", in_shape, 3)
        c, h, w = in_shape
        if self.window > h or self.window > w:
            raise SpecError(f"MaxPool window {self.window} exceeds spatial extent {h}×{w}")
        return (c, (h - self.window) // self.stride + 1, (w - self.window) // self.stride + 1)

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        return tc.max_pool_2d(x, self.window, self.stride), x

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        return tc.max_pool_2d_backward(cache, grad, self.window, self.stride), {}


@dataclass(frozen=True)
class Flatten(LayerSpec):
    """Collapse every non-batch axis into one."""

    kind: ClassVar[str] = "flatten"

    def output_shape(self, in_shape: Shape) -> Shape:
        return (math.prod(in_shape),)

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        return grad.reshape(cache), {}


@dataclass(frozen=True)
class Dense(LayerSpec):
    """Fully connected layer y = W·x + b on a rank-1 input."""

    kind: ClassVar[str] = "dense"

    out_dim: int

    def __post_init__(self) -> None:
        _require_positive("Dense", out_dim=self.out_dim)

    def output_shape(self, in_shape: Shape) -> Shape:
        if len(in_shape) != 1:
            raise SpecError(f"Dense expects a rank-1 input (add Flatten), got shape {in_shape}")
        return (self.out_dim,)

    def param_info(self, in_shape: Shape) -> dict[str, ParamInfo]:
        return {
            "weight": ParamInfo((self.out_dim, in_shape[0]), in_shape[0]),
            "bias": ParamInfo((self.out_dim,), 0),
        }

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        return tc.matvec(params["weight"], x) + params["bias"], x

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        weight = params["weight"]
        return grad @ weight, {"weight": grad.T @ cache, "bias": grad.sum(axis=0)}


# Layer sequences (shared by the composite layers and the network itself)


def sequence_shapes(layers: Sequence[LayerSpec], in_shape: Shape) -> list[Shape]:
    """Output shape after every layer; SpecError carries the failing index."""
    shapes: list[Shape] = []
    shape = tuple(in_shape)
    for index, layer in enumerate(layers):
        try:
            shape = layer.output_shape(shape)
        except SpecError as err:
            raise SpecError(str(err), index) from err
        shapes.append(shape)
    return shapes


def sequence_param_info(
    layers: Sequence[LayerSpec], in_shape: Shape, prefix: str = ""
) -> dict[str, ParamInfo]:
    """Parameter declarations keyed ``<prefix><index>.<name>``."""
    info: dict[str, ParamInfo] = {}
    shape = tuple(in_shape)
    for index, layer in enumerate(layers):
        for name, param in layer.param_info(shape).items():
            info[f"{prefix}{index}.{name}"] = param
        shape = layer.output_shape(shape)
    return info


def sequence_forward(
    layers: Sequence[LayerSpec], params: Params, x: Tensor, stop: int | None = None
) -> tuple[list[Tensor], list[Any]]:
    """Run layers[0:stop]; return every activation and every cache."""
    activations: list[Tensor] = []
    caches: list[Any] = []
    end = len(layers) if stop is None else stop
    for index in range(end):
        x, cache = layers[index].forward(_scope(params, f"{index}."), x)
        activations.append(x)
        caches.append(cache)
    return activations, caches


def sequence_backward(
    layers: Sequence[LayerSpec],
    params: Params,
    caches: Sequence[Any],
    grad: Tensor,
    stop_at: int = 0,
) -> tuple[Tensor, Grads]:
    """Backpropagate through layers[stop_at:] in reverse order."""
    grads: Grads = {}
    for index in range(len(caches) - 1, stop_at - 1, -1):
        grad, layer_grads = layers[index].backward(
            _scope(params, f"{index}."), caches[index], grad
        )
        for name, value in layer_grads.items():
            grads[f"{index}.{name}"] = value
    return grad, grads


def _as_layers(value: Sequence[LayerSpec | Mapping[str, Any]]) -> tuple[LayerSpec, ...]:
    return tuple(v if isinstance(v, LayerSpec) else layer_from_dict(v) for v in value)


@dataclass(frozen=True)
class Residual(LayerSpec):
    """y = inner(x) + x; the inner sequence must preserve the input shape."""

    kind: ClassVar[str] = "residual"

    inner: tuple[LayerSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "inner", _as_layers(self.inner))
        if not self.inner:
            raise SpecError("Residual needs at least one inner layer")

    def output_shape(self, in_shape: Shape) -> Shape:
        try:
            out = sequence_shapes(self.inner, in_shape)[-1]
        except SpecError as err:
            raise SpecError(f"Residual inner {err}") from err
        if tuple(out) != tuple(in_shape):
            raise SpecError(
                f"Residual inner output {out} differs from its input {tuple(in_shape)}"
            )
        return tuple(in_shape)

    def param_info(self, in_shape: Shape) -> dict[str, ParamInfo]:
        return sequence_param_info(self.inner, in_shape, "inner.")

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        activations, caches = sequence_forward(self.inner, _scope(params, "inner."), x)
        return tc.add_tensors(activations[-1], x), caches

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        d_inner, inner_grads = sequence_backward(
            self.inner, _scope(params, "inner."), cache, grad
        )
        return d_inner + grad, {f"inner.{k}": v for k, v in inner_grads.items()}

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "inner": [layer.to_dict() for layer in self.inner]}


@dataclass(frozen=True)
class InceptionBlock(LayerSpec):
    """Parallel branches concatenated along channels.

    Valid-mode branches with different kernel extents end at different
    spatial sizes, so each branch output is center-cropped to the smallest
    branch extent before concatenation.
    """

    kind: ClassVar[str] = "inception"

    branch_specs: tuple[tuple[LayerSpec, ...], ...]

    def __post_init__(self) -> None:
        branches = tuple(_as_layers(branch) for branch in self.branch_specs)
        object.__setattr__(self, "branch_specs", branches)
        if not branches or any(not branch for branch in branches):
            raise SpecError("InceptionBlock needs non-empty branches")

    def _branch_shapes(self, in_shape: Shape) -> list[Shape]:
        _require_rank("InceptionBlock", in_shape, 3)
        outputs = []
        for b, branch in enumerate(self.branch_specs):
            try:
                out = sequence_shapes(branch, in_shape)[-1]
            except SpecError as err:
                raise SpecError(f"InceptionBlock branch {b} {err}") from err
            if len(out) != 3:
                raise SpecError(f"InceptionBlock branch {b} must end in a C×H×W map, got {out}")
            outputs.append(out)
        return outputs

    def output_shape(self, in_shape: Shape) -> Shape:
        outputs = self._branch_shapes(in_shape)
        return (
            sum(out[0] for out in outputs),
            min(out[1] for out in outputs),
            min(out[2] for out in outputs),
        )

    def param_info(self, in_shape: Shape) -> dict[str, ParamInfo]:
        info: dict[str, ParamInfo] = {}
        for b, branch in enumerate(self.branch_specs):
            info.update(sequence_param_info(branch, in_shape, f"branch.{b}."))
        return info

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        outputs: list[Tensor] = []
        caches: list[list[Any]] = []
        for b, branch in enumerate(self.branch_specs):
            activations, branch_caches = sequence_forward(
                branch, _scope(params, f"branch.{b}."), x
            )
            outputs.append(activations[-1])
            caches.append(branch_caches)
        out_h = min(out.shape[-2] for out in outputs)
        out_w = min(out.shape[-1] for out in outputs)
        aligned = [tc.center_crop(out, out_h, out_w) for out in outputs]
        full = [(out.shape[1], out.shape[-2], out.shape[-1]) for out in outputs]
        return tc.concat_channels(aligned), (caches, full)

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        caches, full = cache
        grads: Grads = {}
        d_in: Tensor | None = None
        start = 0
        for b, branch in enumerate(self.branch_specs):
            channels, h, w = full[b]
            branch_grad = tc.center_crop_backward(grad[:, start : start + channels], h, w)
            start += channels
            d_branch, branch_grads = sequence_backward(
                branch, _scope(params, f"branch.{b}."), caches[b], branch_grad
            )
            d_in = d_branch if d_in is None else d_in + d_branch
            grads.update({f"branch.{b}.{k}": v for k, v in branch_grads.items()})
        assert d_in is not None
        return d_in, grads

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "branch_specs": [[layer.to_dict() for layer in branch] for branch in self.branch_specs],
        }


@dataclass(frozen=True)
class Fire(LayerSpec):
    """Squeeze 1×1 conv, then 1×1 and 3×3 expand convs concatenated.

    Every convolution is followed by a ReLU.
    """

    kind: ClassVar[str] = "fire"

    squeeze_channels: int
    expand_channels: int

    def __post_init__(self) -> None:
        _require_positive(
            "Fire",
            squeeze_channels=self.squeeze_channels,
            expand_channels=self.expand_channels,
        )

    @property
    def squeeze(self) -> tuple[LayerSpec, ...]:
        return (Conv(self.squeeze_channels, 1, 1), Relu())

    @property
    def expand(self) -> InceptionBlock:
        return InceptionBlock(
            (
                (Conv(self.expand_channels, 1, 1), Relu()),
                (Conv(self.expand_channels, 3, 3), Relu()),
            )
        )

    def _squeezed_shape(self, in_shape: Shape) -> Shape:
        _require_rank("Fire", in_shape, 3)
        return sequence_shapes(self.squeeze, in_shape)[-1]

    def output_shape(self, in_shape: Shape) -> Shape:
        try:
            return self.expand.output_shape(self._squeezed_shape(in_shape))
        except SpecError as err:
            raise SpecError(f"Fire: {err}") from err

    def param_info(self, in_shape: Shape) -> dict[str, ParamInfo]:
        info = sequence_param_info(self.squeeze, in_shape, "squeeze.")
        info.update(
            {f"expand.{k}": v for k, v in self.expand.param_info(self._squeezed_shape(in_shape)).items()}
        )
        return info

    def forward(self, params: Params, x: Tensor) -> tuple[Tensor, Any]:
        squeezed, squeeze_caches = sequence_forward(self.squeeze, _scope(params, "squeeze."), x)
        y, expand_cache = self.expand.forward(_scope(params, "expand."), squeezed[-1])
        return y, (squeeze_caches, expand_cache)

    def backward(self, params: Params, cache: Any, grad: Tensor) -> tuple[Tensor, Grads]:
        squeeze_caches, expand_cache = cache
        d_squeezed, expand_grads = self.expand.backward(
            _scope(params, "expand."), expand_cache, grad
        )
        d_in, squeeze_grads = sequence_backward(
            self.squeeze, _scope(params, "squeeze."), squeeze_caches, d_squeezed
        )
        grads = {f"squeeze.{k}": v for k, v in squeeze_grads.items()}
        grads.update({f"expand.{k}": v for k, v in expand_grads.items()})
        return d_in, grads


_LAYER_KINDS: dict[str, type[LayerSpec]] = {
    cls.kind: cls
    for cls in (Conv, Relu, MaxPool, Flatten, Dense, Residual, InceptionBlock, Fire)
}


def layer_from_dict(data: Mapping[str, Any]) -> LayerSpec:
    """Rebuild a layer from its ``to_dict`` form."""
    kind = data.get("kind")
    cls = _LAYER_KINDS.get(kind)  # type: ignore[arg-type]
    if cls is None:
        raise SpecError(f"unknown layer kind {kind!r}")
    kwargs = {k: v for k, v in data.items() if k != "kind"}
    try:
        return cls(**kwargs)
    except TypeError as err:
        raise SpecError(f"bad {kind} layer fields: {err}") from err


def layer_kinds() -> list[str]:
    """Registered layer kinds."""
    return sorted(_LAYER_KINDS)


def param_count(info: Mapping[str, ParamInfo]) -> int:
    """Total number of scalar parameters."""
    return int(sum(np.prod(p.shape) for p in info.values()))
