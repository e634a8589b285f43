"""Exceptions raised by the transfer-learning toolkit."""

from __future__ import annotations


class TransferError(Exception):
    """Base error for the toolkit.

    The pipeline annotates errors with the stage that raised them so the CLI
    can name it in its diagnostic.
    """

    stage: str | None = None


class DomainError(TransferError, ValueError):
    """A numerical kernel received arguments outside its domain."""


class SpecError(TransferError):
    """A network specification failed shape inference."""

    def __init__(self, message: str, layer_index: int | None = None) -> None:
        if layer_index is not None:
            message = f"layer {layer_index}: {message}"
        super().__init__(message)
        self.layer_index = layer_index


class ConfigError(TransferError):
    """Invalid configuration value or unknown configuration key."""


class UsageError(TransferError):
    """Bad command-line usage."""


class DataError(TransferError):
    """Dataset, image or report input could not be used."""


class ImageDecodeError(DataError):
    """Netpbm payload is malformed or truncated."""


class UnsupportedFormatError(DataError):
    """File is not in a supported image format."""


class WeightFileError(DataError):
    """Tensor container could not be read."""


class WeightFormatError(WeightFileError):
    """Container framing (magic, header) is malformed."""


class VersionMismatchError(WeightFileError):
    """Container version is not supported."""


class ChecksumError(WeightFileError):
    """Container CRC32 does not match its contents."""


class ShapeInconsistencyError(WeightFileError):
    """Stored tensor shapes disagree with the embedded network spec."""


class TrainingError(TransferError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int, batch: int) -> None:
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch
