"""Dense tensor kernels.

Tensors are float64 numpy arrays. The 2D kernels take a single C×H×W tensor
or a minibatch N×C×H×W; batching never changes the per-element arithmetic.

Convolutions use the cross-correlation form y[k] = Σ_j u[j]·x[ζk + j] and
valid mode only: an output exists only where the kernel fully overlaps the
input. Sums are accumulated in a fixed loop order (channel, kernel row,
kernel column) starting from zero, with the bias added last, so results are
reproducible bit-for-bit by a direct-summation loop in the same order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .errors import DomainError

_LOGGER = logging.getLogger(__name__)

Tensor = npt.NDArray[np.float64]

__all__ = [
    "Stride",
    "Tensor",
    "add",
    "add_tensors",
    "as_tensor",
    "center_crop",
    "center_crop_backward",
    "concat_channels",
    "conv_output_length",
    "conv_valid_1d",
    "conv_valid_2d",
    "conv_valid_2d_backward",
    "dot",
    "matvec",
    "max_pool_2d",
    "max_pool_2d_backward",
    "relu",
    "relu_backward",
    "scale",
]


@dataclass(frozen=True)
class Stride:
    """Shift of the filter window between consecutive outputs."""

    zeta: int = 1

    def __post_init__(self) -> None:
        if isinstance(self.zeta, bool) or not isinstance(self.zeta, (int, np.integer)):
            raise DomainError(f"stride must be an integer, got {self.zeta!r}")
        if self.zeta < 1:
            raise DomainError(f"stride must be >= 1, got {self.zeta}")


def _zeta(stride: Stride | int) -> int:
    if isinstance(stride, Stride):
        return int(stride.zeta)
    return int(Stride(stride).zeta)


def as_tensor(values: npt.ArrayLike) -> Tensor:
    """Convert to a float64 array, rejecting NaN and infinity."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("tensor contains non-finite values")
    return arr


def conv_output_length(length: int, kernel: int, stride: Stride | int) -> int:
    """Valid-mode output length floor((L - K) / ζ) + 1."""
    zeta = _zeta(stride)
    if kernel < 1:
        raise DomainError(f"kernel length must be >= 1, got {kernel}")
    if kernel > length:
        raise DomainError(f"kernel length {kernel} exceeds input length {length}")
    return (length - kernel) // zeta + 1


def conv_valid_1d(x: npt.ArrayLike, u: npt.ArrayLike, stride: Stride | int = 1) -> Tensor:
    """Valid 1D cross-correlation of x with kernel u."""
    xs = np.asarray(x, dtype=np.float64)
    us = np.asarray(u, dtype=np.float64)
    if xs.ndim != 1 or us.ndim != 1:
        raise DomainError("conv_valid_1d expects rank-1 input and kernel")
    zeta = _zeta(stride)
    n_out = conv_output_length(xs.shape[0], us.shape[0], zeta)

    out = np.zeros(n_out, dtype=np.float64)
    span = zeta * (n_out - 1) + 1
    for j in range(us.shape[0]):
        out += us[j] * xs[j : j + span : zeta]
    return out


def _as_batch(inp: npt.ArrayLike, name: str) -> tuple[Tensor, bool]:
    arr = np.asarray(inp, dtype=np.float64)
    if arr.ndim == 3:
        return arr[None], False
    if arr.ndim == 4:
        return arr, True
    raise DomainError(f"{name} expects a C×H×W or N×C×H×W tensor, got rank {arr.ndim}")


def conv_valid_2d(
    inp: npt.ArrayLike,
    kernels: npt.ArrayLike,
    bias: npt.ArrayLike,
    stride: Stride | int = 1,
) -> Tensor:
    """Multi-channel valid 2D cross-correlation plus per-channel bias.

    No activation is applied.
    """
    xb, batched = _as_batch(inp, "conv_valid_2d")
    k = np.asarray(kernels, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    if k.ndim != 4:
        raise DomainError("kernels must be C_out×C_in×Kh×Kw")
    _, c_in, h, w = xb.shape
    c_out, k_cin, kh, kw = k.shape
    if k_cin != c_in:
        raise DomainError(f"kernel expects {k_cin} input channels, input has {c_in}")
    if b.shape != (c_out,):
        raise DomainError(f"bias must have length {c_out}, got shape {b.shape}")
    zeta = _zeta(stride)
    oh = conv_output_length(h, kh, zeta)
    ow = conv_output_length(w, kw, zeta)

    out = np.zeros((xb.shape[0], c_out, oh, ow), dtype=np.float64)
    span_h = zeta * (oh - 1) + 1
    span_w = zeta * (ow - 1) + 1
    for c in range(c_in):
        for i in range(kh):
            for j in range(kw):
                window = xb[:, c, i : i + span_h : zeta, j : j + span_w : zeta]
                out += k[:, c, i, j][None, :, None, None] * window[:, None, :, :]
    out += b[None, :, None, None]
    return out if batched else out[0]


def conv_valid_2d_backward(
    inp: npt.ArrayLike,
    kernels: npt.ArrayLike,
    grad_out: npt.ArrayLike,
    stride: Stride | int = 1,
) -> tuple[Tensor, Tensor, Tensor]:
    """Gradients of conv_valid_2d with respect to input, kernels and bias."""
    xb, batched = _as_batch(inp, "conv_valid_2d_backward")
    k = np.asarray(kernels, dtype=np.float64)
    g = np.asarray(grad_out, dtype=np.float64)
    if not batched:
        g = g[None]
    zeta = _zeta(stride)
    _, c_in, _, _ = xb.shape
    _, _, kh, kw = k.shape
    oh, ow = g.shape[2], g.shape[3]
    span_h = zeta * (oh - 1) + 1
    span_w = zeta * (ow - 1) + 1

    d_in = np.zeros_like(xb)
    d_k = np.zeros_like(k)
    d_b = g.sum(axis=(0, 2, 3))
    for c in range(c_in):
        for i in range(kh):
            for j in range(kw):
                rows = slice(i, i + span_h, zeta)
                cols = slice(j, j + span_w, zeta)
                d_k[:, c, i, j] = np.einsum("noyx,nyx->o", g, xb[:, c, rows, cols])
                d_in[:, c, rows, cols] += np.einsum("o,noyx->nyx", k[:, c, i, j], g)
    return (d_in if batched else d_in[0]), d_k, d_b


def relu(x: npt.ArrayLike) -> Tensor:
    """Elementwise max(0, x)."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(x: npt.ArrayLike, grad: npt.ArrayLike) -> Tensor:
    """Pass gradient where the pre-activation is strictly positive."""
    xs = np.asarray(x, dtype=np.float64)
    return np.where(xs > 0.0, np.asarray(grad, dtype=np.float64), 0.0)


def _pool_dims(h: int, w: int, window: int, zeta: int) -> tuple[int, int]:
    if window < 1:
        raise DomainError(f"pool window must be >= 1, got {window}")
    if window > h or window > w:
        raise DomainError(f"pool window {window} exceeds spatial extent {h}×{w}")
    return (h - window) // zeta + 1, (w - window) // zeta + 1


def max_pool_2d(inp: npt.ArrayLike, window: int, stride: Stride | int) -> Tensor:
    """Per-channel maximum over valid windows."""
    xb, batched = _as_batch(inp, "max_pool_2d")
    zeta = _zeta(stride)
    oh, ow = _pool_dims(xb.shape[2], xb.shape[3], window, zeta)
    span_h = zeta * (oh - 1) + 1
    span_w = zeta * (ow - 1) + 1

    out = xb[:, :, 0:span_h:zeta, 0:span_w:zeta].copy()
    for i in range(window):
        for j in range(window):
            np.maximum(out, xb[:, :, i : i + span_h : zeta, j : j + span_w : zeta], out=out)
    return out if batched else out[0]


def max_pool_2d_backward(
    inp: npt.ArrayLike, grad_out: npt.ArrayLike, window: int, stride: Stride | int
) -> Tensor:
    """Route each output gradient to the first maximum of its window."""
    xb, batched = _as_batch(inp, "max_pool_2d_backward")
    g = np.asarray(grad_out, dtype=np.float64)
    if not batched:
        g = g[None]
    zeta = _zeta(stride)
    pooled = max_pool_2d(xb, window, zeta)
    oh, ow = pooled.shape[2], pooled.shape[3]
    span_h = zeta * (oh - 1) + 1
    span_w = zeta * (ow - 1) + 1

    d_in = np.zeros_like(xb)
    taken = np.zeros(pooled.shape, dtype=bool)
    for i in range(window):
        for j in range(window):
            rows = slice(i, i + span_h, zeta)
            cols = slice(j, j + span_w, zeta)
            hit = (xb[:, :, rows, cols] == pooled) & ~taken
            d_in[:, :, rows, cols] += np.where(hit, g, 0.0)
            taken |= hit
    return d_in if batched else d_in[0]


def matvec(weights: npt.ArrayLike, x: npt.ArrayLike) -> Tensor:
    """W·x for W of shape k×d and x of length d (or a batch N×d)."""
    w = np.asarray(weights, dtype=np.float64)
    xs = np.asarray(x, dtype=np.float64)
    if w.ndim != 2:
        raise DomainError("matvec expects a rank-2 matrix")
    if xs.ndim not in (1, 2) or xs.shape[-1] != w.shape[1]:
        raise DomainError(
            f"matvec dimension mismatch: matrix {w.shape}, vector {xs.shape}"
        )
    out = np.zeros(xs.shape[:-1] + (w.shape[0],), dtype=np.float64)
    for j in range(w.shape[1]):
        out += xs[..., j, None] * w[:, j]
    return out


def add(x: npt.ArrayLike, y: npt.ArrayLike) -> Tensor:
    """Vector addition of two equal-length rank-1 tensors."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise DomainError(f"add expects equal-length vectors, got {xs.shape} and {ys.shape}")
    return xs + ys


def scale(x: npt.ArrayLike, factor: float) -> Tensor:
    """Multiply every entry by a scalar."""
    return np.asarray(x, dtype=np.float64) * float(factor)


def dot(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """Inner product of two equal-length vectors."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise DomainError(f"dot expects equal-length vectors, got {xs.shape} and {ys.shape}")
    return float(np.dot(xs, ys))


def add_tensors(x: npt.ArrayLike, y: npt.ArrayLike) -> Tensor:
    """Elementwise sum of equal-shape tensors (residual merge)."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape:
        raise DomainError(f"add_tensors shape mismatch: {xs.shape} vs {ys.shape}")
    return xs + ys


def concat_channels(tensors: Sequence[npt.ArrayLike]) -> Tensor:
    """Concatenate C_i×H×W tensors (or batches) along the channel axis."""
    arrays = [np.asarray(t, dtype=np.float64) for t in tensors]
    if not arrays:
        raise DomainError("concat_channels needs at least one tensor")
    rank = arrays[0].ndim
    if rank not in (3, 4):
        raise DomainError("concat_channels expects C×H×W or N×C×H×W tensors")
    ref = arrays[0].shape
    for arr in arrays[1:]:
        if arr.ndim != rank or arr.shape[-2:] != ref[-2:] or arr.shape[:-3] != ref[:-3]:
            raise DomainError(
                f"concat_channels needs equal spatial dims, got {ref} and {arr.shape}"
            )
    return np.concatenate(arrays, axis=-3)


def _crop_offsets(h: int, w: int, out_h: int, out_w: int) -> tuple[int, int]:
    if out_h < 1 or out_w < 1 or out_h > h or out_w > w:
        raise DomainError(f"cannot center-crop {h}×{w} to {out_h}×{out_w}")
    return (h - out_h) // 2, (w - out_w) // 2


def center_crop(x: npt.ArrayLike, out_h: int, out_w: int) -> Tensor:
    """Central out_h×out_w window of the last two axes."""
    xs = np.asarray(x, dtype=np.float64)
    top, left = _crop_offsets(xs.shape[-2], xs.shape[-1], out_h, out_w)
    return xs[..., top : top + out_h, left : left + out_w].copy()


def center_crop_backward(grad: npt.ArrayLike, full_h: int, full_w: int) -> Tensor:
    """Scatter a cropped gradient back into a zero tensor of the full extent."""
    g = np.asarray(grad, dtype=np.float64)
    out_h, out_w = g.shape[-2], g.shape[-1]
    top, left = _crop_offsets(full_h, full_w, out_h, out_w)
    full = np.zeros(g.shape[:-2] + (full_h, full_w), dtype=np.float64)
    full[..., top : top + out_h, left : left + out_w] = g
    return full
