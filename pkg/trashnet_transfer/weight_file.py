"""Checksummed tensor container used for weights, features, heads and datasets.

Layout (all integers little-endian)::

    b"RNFW" | u32 version | u32 header length | JSON header | f64 payload | u32 CRC32

The JSON header holds ``kind``, free-form ``meta`` and one ``{name, shape,
offset}`` entry per tensor, offsets counted in bytes from the start of the
payload. Tensors are stored back to back in declaration order. The CRC32
covers every byte before it.
"""

from __future__ import annotations

import json
import logging
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import numpy.typing as npt

from .cnn_engine import NetworkSpec, TrainedNetwork, check_parameters
from .const import CONTAINER_MAGIC, CONTAINER_VERSION, KIND_WEIGHTS
from .errors import (
    ChecksumError,
    DataError,
    ShapeInconsistencyError,
    SpecError,
    VersionMismatchError,
    WeightFileError,
    WeightFormatError,
)
from .tensor_core import Tensor

_LOGGER = logging.getLogger(__name__)

_PREFIX = struct.Struct("<4sII")
_CRC = struct.Struct("<I")
_F64 = np.dtype("<f8")


@dataclass(frozen=True)
class Container:
    """Decoded container contents."""

    kind: str
    meta: dict[str, Any]
    tensors: dict[str, Tensor]


def encode_container(
    kind: str, meta: Mapping[str, Any], tensors: Mapping[str, npt.ArrayLike]
) -> bytes:
    """Serialize named float64 tensors with a JSON header."""
    entries = []
    chunks = []
    offset = 0
    for name, value in tensors.items():
        arr = np.ascontiguousarray(value, dtype=_F64)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunk = arr.tobytes()
        chunks.append(chunk)
        offset += len(chunk)
    header = json.dumps(
        {"kind": kind, "meta": dict(meta), "tensors": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    body = _PREFIX.pack(CONTAINER_MAGIC, CONTAINER_VERSION, len(header)) + header + b"".join(chunks)
    return body + _CRC.pack(zlib.crc32(body))


def _parse_header(raw: bytes) -> dict[str, Any]:
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise WeightFormatError(f"unreadable container header: {err}") from err
    if (
        not isinstance(header, dict)
        or not isinstance(header.get("kind"), str)
        or not isinstance(header.get("meta"), dict)
        or not isinstance(header.get("tensors"), list)
    ):
        raise WeightFormatError("container header lacks kind, meta or tensors")
    return header


def decode_container(data: bytes, expected_kind: str | None = None) -> Container:
    """Validate and unpack container bytes.

    Checks run in order: length, magic, CRC32, version, header, tensor extents.
    """
    if len(data) < _PREFIX.size + _CRC.size:
        raise ChecksumError(f"container truncated to {len(data)} bytes")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != CONTAINER_MAGIC:
        raise WeightFormatError(f"bad magic {magic!r}, expected {CONTAINER_MAGIC!r}")
    body, (stored_crc,) = data[: -_CRC.size], _CRC.unpack(data[-_CRC.size :])
    actual_crc = zlib.crc32(body)
    if actual_crc != stored_crc:
        raise ChecksumError(f"CRC32 mismatch: stored {stored_crc:08x}, computed {actual_crc:08x}")
    if version != CONTAINER_VERSION:
        raise VersionMismatchError(
            f"container version {version} is not supported (expected {CONTAINER_VERSION})"
        )
    header_end = _PREFIX.size + header_len
    if header_end > len(body):
        raise WeightFormatError(f"header length {header_len} runs past the end of the file")
    header = _parse_header(body[_PREFIX.size : header_end])
    if expected_kind is not None and header["kind"] != expected_kind:
        raise WeightFormatError(
            f"container holds {header['kind']!r} data, expected {expected_kind!r}"
        )

    payload = body[header_end:]
    tensors: dict[str, Tensor] = {}
    cursor = 0
    for entry in header["tensors"]:
        try:
            name = str(entry["name"])
            shape = tuple(int(d) for d in entry["shape"])
            offset = int(entry["offset"])
        except (KeyError, TypeError, ValueError) as err:
            raise WeightFormatError(f"malformed tensor entry {entry!r}") from err
        if any(d < 0 for d in shape):
            raise ShapeInconsistencyError(f"tensor {name} has negative dimension in {shape}")
        size = math.prod(shape) * _F64.itemsize
        if offset != cursor or offset + size > len(payload):
            raise ShapeInconsistencyError(
                f"tensor {name} with shape {shape} at offset {offset} does not fit the payload"
            )
        arr = np.frombuffer(payload, dtype=_F64, count=math.prod(shape), offset=offset)
        tensors[name] = arr.reshape(shape).astype(np.float64)
        cursor = offset + size
    if cursor != len(payload):
        raise ShapeInconsistencyError(
            f"payload has {len(payload) - cursor} bytes not covered by any tensor"
        )
    return Container(header["kind"], header["meta"], tensors)


def write_container(
    path: str | Path, kind: str, meta: Mapping[str, Any], tensors: Mapping[str, npt.ArrayLike]
) -> Path:
    """Encode and write a container; returns the path written."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(encode_container(kind, meta, tensors))
    except OSError as err:
        raise DataError(f"cannot write {target}: {err}") from err
    _LOGGER.info("Wrote %s container to %s", kind, target)
    return target


def read_container(path: str | Path, expected_kind: str | None = None) -> Container:
    """Read and decode a container file; errors name the path."""
    source = Path(path)
    try:
        data = source.read_bytes()
    except OSError as err:
        raise DataError(f"cannot read {source}: {err}") from err
    try:
        return decode_container(data, expected_kind)
    except WeightFileError as err:
        raise type(err)(f"{source}: {err}") from err


# Networks


def network_meta(net: TrainedNetwork) -> dict[str, Any]:
    return {"spec": net.spec.to_dict(), "provenance": net.provenance}


def network_from_parts(meta: Mapping[str, Any], tensors: Mapping[str, Tensor]) -> TrainedNetwork:
    """Rebuild a network, validating tensor shapes against the embedded spec."""
    try:
        spec = NetworkSpec.from_dict(meta["spec"])
        spec.validate(require_features=False)
    except (KeyError, TypeError) as err:
        raise WeightFormatError(f"container lacks a network spec: {err}") from err
    except SpecError as err:
        raise WeightFormatError(f"embedded network spec is invalid: {err}") from err
    check_parameters(spec, tensors)
    return TrainedNetwork(spec, tensors, str(meta.get("provenance", "")))


def save_weights(net: TrainedNetwork, path: str | Path) -> Path:
    """Write a network so load_weights() returns it bit-exact."""
    return write_container(path, KIND_WEIGHTS, network_meta(net), net.parameters)


def load_weights(path: str | Path) -> TrainedNetwork:
    """Read a weight file written by save_weights()."""
    container = read_container(path, KIND_WEIGHTS)
    try:
        net = network_from_parts(container.meta, container.tensors)
    except WeightFileError as err:
        raise type(err)(f"{path}: {err}") from err
    _LOGGER.info("Loaded weights from %s (%s)", path, net.provenance)
    return net
