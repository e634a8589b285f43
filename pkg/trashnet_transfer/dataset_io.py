"""Dataset ingestion, netpbm decoding, resizing, splitting and synthesis.

Datasets live on disk as ``root/<class name>/<image files>`` with binary PPM
(P6) or PGM (P5) images, or as a pre-decoded tensor container. Pixels are
normalized to [0, 1] at decode time; feature standardization is the
classifier heads' concern.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt

from .const import DEFAULT_CLASS_NAMES, KIND_DATASET
from .errors import ConfigError, DataError, DomainError, ImageDecodeError, UnsupportedFormatError, WeightFileError
from .tensor_core import Tensor
from .weight_file import read_container, write_container

_LOGGER = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".ppm", ".pgm", ".pnm")
_WHITESPACE = b" \t\r\n\v\f"


@dataclass(frozen=True)
class ClassLabel:
    """Class index and name."""

    index: int
    name: str


def _read_only(arr: npt.ArrayLike, dtype: type) -> npt.NDArray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Images stacked as N×3×H×W in [0, 1] with integer labels."""

    images: Tensor
    labels: npt.NDArray[np.int64]
    class_names: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self) -> None:
        images = _read_only(self.images, np.float64)
        labels = _read_only(self.labels, np.int64)
        names = tuple(self.class_names)
        if images.ndim != 4 or images.shape[0] == 0:
            raise DataError(f"dataset needs a non-empty N×C×H×W image stack, got {images.shape}")
        if labels.shape != (images.shape[0],):
            raise DataError(f"{labels.shape[0]} labels for {images.shape[0]} images")
        if not names or any(not name for name in names) or len(set(names)) != len(names):
            raise DataError(f"class names must be non-empty and unique, got {names}")
        if labels.min() < 0 or labels.max() >= len(names):
            raise DataError(f"labels must lie in 0..{len(names) - 1}")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", names)

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    @property
    def class_labels(self) -> list[ClassLabel]:
        return [ClassLabel(i, name) for i, name in enumerate(self.class_names)]

    @property
    def image_shape(self) -> tuple[int, int, int]:
        _, c, h, w = self.images.shape
        return (c, h, w)

    @property
    def samples(self) -> list[tuple[Tensor, int]]:
        """(image, label) pairs in dataset order."""
        return [(self.images[i], int(self.labels[i])) for i in range(len(self))]

    def counts_per_class(self) -> list[int]:
        return [int(n) for n in np.bincount(self.labels, minlength=self.class_count)]

    def subset(self, indices: npt.ArrayLike, provenance: str | None = None) -> LabeledDataset:
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(
            self.images[idx],
            self.labels[idx],
            self.class_names,
            self.provenance if provenance is None else provenance,
        )

    def same_content(self, other: LabeledDataset) -> bool:
        """Bit-exact comparison of images, labels and class names."""
        return (
            self.class_names == other.class_names
            and self.images.shape == other.images.shape
            and self.images.tobytes() == other.images.tobytes()
            and self.labels.tobytes() == other.labels.tobytes()
        )


@dataclass(frozen=True)
class SplitPair:
    """Stratified train/test halves of one dataset."""

    train: LabeledDataset
    test: LabeledDataset
    seed: int
    train_indices: tuple[int, ...] = ()
    test_indices: tuple[int, ...] = ()


# Netpbm


def _read_header(data: bytes) -> tuple[list[bytes], int]:
    """Magic, width, height and maxval tokens plus the raster offset.

    Comments run from '#' to the end of the line. Exactly one whitespace byte
    separates maxval from the raster.
    """
    tokens: list[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        if pos >= n:
            raise ImageDecodeError("truncated netpbm header")
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
        if len(tokens) == 1 and tokens[0] not in (b"P5", b"P6"):
            raise ImageDecodeError(f"bad magic {tokens[0]!r}; only binary P5/P6 are supported")
    if pos >= n or data[pos] not in _WHITESPACE:
        raise ImageDecodeError("missing whitespace before the raster")
    return tokens, pos + 1


def decode_image(data: bytes) -> Tensor:
    """Decode binary PPM (P6) or PGM (P5) bytes to a 3×H×W tensor in [0, 1].

    Gray images are replicated across the three channels.
    """
    if len(data) < 2 or data[:2] not in (b"P5", b"P6"):
        raise ImageDecodeError(f"bad magic {bytes(data[:2])!r}; only binary P5/P6 are supported")
    tokens, offset = _read_header(data)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as err:
        raise ImageDecodeError(f"non-numeric netpbm header field: {err}") from err
    if width < 1 or height < 1:
        raise ImageDecodeError(f"image dimensions must be positive, got {width}×{height}")
    if maxval != 255:
        raise ImageDecodeError(f"maxval {maxval} is not supported (expected 255)")
    channels = 3 if tokens[0] == b"P6" else 1
    expected = width * height * channels
    raster = data[offset : offset + expected]
    if len(raster) < expected:
        raise ImageDecodeError(
            f"truncated raster: {width}×{height}×{channels} needs {expected} bytes, got {len(raster)}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    image = pixels.transpose(2, 0, 1).astype(np.float64) / 255.0
    if channels == 1:
        image = np.repeat(image, 3, axis=0)
    return image


def encode_ppm(image: npt.ArrayLike) -> bytes:
    """Binary P6 bytes for a 3×H×W tensor in [0, 1]."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise DomainError(f"encode_ppm expects a 3×H×W tensor, got {img.shape}")
    _, h, w = img.shape
    raster = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8).transpose(1, 2, 0)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + raster.tobytes()


# Resizing


def _sample_grid(size_in: int, size_out: int) -> tuple[npt.NDArray[np.intp], npt.NDArray[np.intp], Tensor]:
    if size_out > 1:
        src = np.arange(size_out) * (size_in - 1) / (size_out - 1)
    else:
        src = np.zeros(1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, size_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img: npt.ArrayLike, out_h: int, out_w: int) -> Tensor:
    """Bilinear resize on a corner-aligned sampling grid.

    Source coordinate = out index · (in - 1) / (out - 1) when out > 1, else 0.
    """
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 3 or x.shape[1] < 1 or x.shape[2] < 1:
        raise DomainError(f"resize expects a C×H×W tensor with H, W >= 1, got {x.shape}")
    if out_h < 1 or out_w < 1:
        raise DomainError(f"output dimensions must be positive, got {out_h}×{out_w}")
    r_lo, r_hi, r_frac = _sample_grid(x.shape[1], out_h)
    c_lo, c_hi, c_frac = _sample_grid(x.shape[2], out_w)
    rows = x[:, r_lo, :] * (1.0 - r_frac)[:, None] + x[:, r_hi, :] * r_frac[:, None]
    return rows[:, :, c_lo] * (1.0 - c_frac) + rows[:, :, c_hi] * c_frac


# Loading


def _load_image(path: Path, target_h: int, target_w: int) -> Tensor:
    if path.suffix.lower() not in IMAGE_SUFFIXES:
        raise UnsupportedFormatError(f"{path}: unsupported image format {path.suffix!r}")
    try:
        data = path.read_bytes()
    except OSError as err:
        raise DataError(f"{path}: cannot read file: {err}") from err
    try:
        image = decode_image(data)
    except ImageDecodeError as err:
        raise ImageDecodeError(f"{path}: {err}") from err
    if image.shape[1:] == (target_h, target_w):
        return image
    return resize_bilinear(image, target_h, target_w)


def _visible(entries: Sequence[Path]) -> list[Path]:
    return sorted((p for p in entries if not p.name.startswith(".")), key=lambda p: p.name)


def load_dataset(root_directory: str | Path, target_h: int, target_w: int) -> LabeledDataset:
    """Load ``root/<class>/<image>`` into a dataset.

    Class indices follow sorted subdirectory names and samples follow sorted
    file names, so two loads of the same tree are identical.
    """
    root = Path(root_directory)
    if not root.is_dir():
        raise DataError(f"dataset root {root} does not exist or is not a directory")
    if target_h < 1 or target_w < 1:
        raise ConfigError(f"target size must be positive, got {target_h}×{target_w}")
    class_dirs = [p for p in _visible(list(root.iterdir())) if p.is_dir()]
    if not class_dirs:
        raise DataError(f"dataset root {root} has no class subdirectories")

    images: list[Tensor] = []
    labels: list[int] = []
    for index, class_dir in enumerate(class_dirs):
        files = [p for p in _visible(list(class_dir.iterdir())) if p.is_file()]
        if not files:
            raise DataError(f"class directory {class_dir} is empty")
        for path in files:
            images.append(_load_image(path, target_h, target_w))
            labels.append(index)
        _LOGGER.debug("Loaded %d images for class %s", len(files), class_dir.name)

    dataset = LabeledDataset(
        np.stack(images),
        np.asarray(labels, dtype=np.int64),
        tuple(p.name for p in class_dirs),
        f"dir:{root.name}",
    )
    _LOGGER.info(
        "Loaded %d images in %d classes from %s", len(dataset), dataset.class_count, root
    )
    return dataset


def save_dataset_container(dataset: LabeledDataset, path: str | Path) -> Path:
    """Store a decoded dataset in a tensor container."""
    meta = {"class_names": list(dataset.class_names), "provenance": dataset.provenance}
    tensors = {"images": dataset.images, "labels": dataset.labels.astype(np.float64)}
    return write_container(path, KIND_DATASET, meta, tensors)


def load_dataset_container(path: str | Path) -> LabeledDataset:
    container = read_container(path, KIND_DATASET)
    try:
        images = container.tensors["images"]
        raw_labels = container.tensors["labels"]
        names = tuple(str(n) for n in container.meta["class_names"])
    except KeyError as err:
        raise DataError(f"{path}: dataset container lacks {err}") from err
    labels = raw_labels.astype(np.int64)
    if not np.array_equal(labels, raw_labels):
        raise DataError(f"{path}: dataset labels are not integral")
    return LabeledDataset(images, labels, names, str(container.meta.get("provenance", "")))


def load_any_dataset(path: str | Path, target_h: int, target_w: int) -> LabeledDataset:
    """Load a class directory tree or a dataset container file."""
    source = Path(path)
    if source.is_dir():
        return load_dataset(source, target_h, target_w)
    if not source.exists():
        raise DataError(f"dataset path {source} does not exist")
    try:
        dataset = load_dataset_container(source)
    except WeightFileError as err:
        raise DataError(f"{source} is neither a class directory nor a dataset container: {err}") from err
    if dataset.image_shape[1:] == (target_h, target_w):
        return dataset
    resized = np.stack([resize_bilinear(img, target_h, target_w) for img in dataset.images])
    return LabeledDataset(resized, dataset.labels, dataset.class_names, dataset.provenance)


# Splitting


def split_half(ds: LabeledDataset, seed: int) -> SplitPair:
    """Stratified half split: per class, a seeded shuffle sends ceil(n/2) to train.

    Classes are shuffled in index order from one generator; both halves keep
    the original sample order.
    """
    rng = np.random.default_rng(seed)
    train: list[int] = []
    test: list[int] = []
    for c in range(ds.class_count):
        members = np.flatnonzero(ds.labels == c)
        if members.size < 2:
            raise DataError(
                f"class {ds.class_names[c]!r} has {members.size} sample(s); splitting needs at least 2"
            )
        shuffled = rng.permutation(members)
        n_train = math.ceil(members.size / 2)
        train.extend(int(i) for i in shuffled[:n_train])
        test.extend(int(i) for i in shuffled[n_train:])
    train.sort()
    test.sort()
    _LOGGER.info("Split %d samples into %d train / %d test (seed=%d)", len(ds), len(train), len(test), seed)
    return SplitPair(
        ds.subset(train, f"{ds.provenance}|train(seed={seed})"),
        ds.subset(test, f"{ds.provenance}|test(seed={seed})"),
        seed,
        tuple(train),
        tuple(test),
    )


# Synthesis

Mask = npt.NDArray[np.bool_]
_Pattern = Callable[[Tensor, Tensor, float, float, float], Mask]


def _circle(y: Tensor, x: Tensor, cy: float, cx: float, s: float) -> Mask:
    return (y - cy) ** 2 + (x - cx) ** 2 <= s * s


def _square(y: Tensor, x: Tensor, cy: float, cx: float, s: float) -> Mask:
    half = 0.8 * s
    return (np.abs(y - cy) <= half) & (np.abs(x - cx) <= half)


def _cross(y: Tensor, x: Tensor, cy: float, cx: float, s: float) -> Mask:
    arm = s / 4
    dy = np.abs(y - cy)
    dx = np.abs(x - cx)
    return ((dx <= arm) & (dy <= s)) | ((dy <= arm) & (dx <= s))


def _horizontal_stripes(y: Tensor, x: Tensor, cy: float, cx: float, s: float) -> Mask:
    return np.sin((y - cy) * math.pi / (0.4 * s)) > 0


def _vertical_stripes(y: Tensor, x: Tensor, cy: float, cx: float, s: float) -> Mask:
    return np.sin((x - cx) * math.pi / (0.4 * s)) > 0


def _diagonal(y: Tensor, x: Tensor, cy: float, cx: float, s: float) -> Mask:
    return np.abs((x - cx) - (y - cy)) <= s / 3


PATTERNS: tuple[_Pattern, ...] = (
    _circle,
    _square,
    _cross,
    _horizontal_stripes,
    _vertical_stripes,
    _diagonal,
)

# Foreground tint per class on a white background
_TINTS = np.array(
    [
        [0.20, 0.55, 0.35],
        [0.30, 0.30, 0.70],
        [0.55, 0.40, 0.20],
        [0.70, 0.25, 0.30],
        [0.45, 0.45, 0.45],
        [0.15, 0.15, 0.15],
    ]
)


def synthesize_dataset(
    k: int = 6,
    per_class: int = 50,
    image_size: int = 64,
    noise_level: float = 0.1,
    seed: int = 0,
    class_names: Sequence[str] | None = None,
) -> LabeledDataset:
    """Balanced synthetic dataset with one parametric pattern per class.

    Class c draws pattern c (filled circle, square, cross, horizontal stripes,
    vertical stripes, diagonal band) at a random position and scale, then adds
    uniform noise in [-noise_level, noise_level] and clips to [0, 1].
    """
    if not 2 <= k <= len(PATTERNS):
        raise ConfigError(f"k must lie in 2..{len(PATTERNS)}, got {k}")
    if per_class < 2:
        raise ConfigError(f"per_class must be >= 2, got {per_class}")
    if image_size < 1:
        raise ConfigError(f"image_size must be positive, got {image_size}")
    if not 0.0 <= noise_level <= 1.0:
        raise ConfigError(f"noise_level must lie in [0, 1], got {noise_level}")
    names = tuple(class_names) if class_names is not None else DEFAULT_CLASS_NAMES[:k]
    if len(names) != k:
        raise ConfigError(f"{len(names)} class names for k={k}")

    rng = np.random.default_rng(seed)
    axis = np.linspace(0.0, 1.0, image_size)
    y, x = np.meshgrid(axis, axis, indexing="ij")
    images = np.empty((k * per_class, 3, image_size, image_size))
    labels = np.repeat(np.arange(k, dtype=np.int64), per_class)
    for n, c in enumerate(labels):
        cy, cx = rng.uniform(0.35, 0.65, size=2)
        scale = rng.uniform(0.18, 0.3)
        mask = PATTERNS[c](y, x, float(cy), float(cx), float(scale))
        img = np.where(mask[None], _TINTS[c][:, None, None], 1.0)
        if noise_level > 0:
            img = img + rng.uniform(-noise_level, noise_level, size=img.shape)
        images[n] = np.clip(img, 0.0, 1.0)

    _LOGGER.info(
        "Synthesized %d images (%d classes × %d, %dpx, noise=%g, seed=%d)",
        images.shape[0],
        k,
        per_class,
        image_size,
        noise_level,
        seed,
    )
    return LabeledDataset(
        images,
        labels,
        names,
        f"synthetic(k={k},per_class={per_class},size={image_size},noise={noise_level:g},seed={seed})",
    )


def write_dataset_tree(dataset: LabeledDataset, root: str | Path) -> list[Path]:
    """Write every image as ``root/<class>/<class>_<nnnn>.ppm``."""
    base = Path(root)
    written: list[Path] = []
    counters = [0] * dataset.class_count
    try:
        for image, label in zip(dataset.images, dataset.labels):
            name = dataset.class_names[label]
            target = base / name / f"{name}_{counters[label]:04d}.ppm"
            counters[label] += 1
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(encode_ppm(image))
            written.append(target)
    except OSError as err:
        raise DataError(f"cannot write dataset tree under {base}: {err}") from err
    _LOGGER.info("Wrote %d images to %s", len(written), base)
    return written
