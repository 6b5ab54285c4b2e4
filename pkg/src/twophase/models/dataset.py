"""Training data: IDX ingestion, synthetic generation and subsetting."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
import structlog

from ..constants import (
    IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
    MNIST_CLASSES,
    PIXEL_SCALE,
)
from ..exceptions import (
    BadMagicError,
    ContractViolationError,
    CountMismatchError,
    IngestError,
    InvalidLabelError,
    TruncatedFileError,
)
from ..numerics import Matrix

__all__ = [
    "Dataset",
    "accuracy",
    "gen_synthetic_dataset",
    "load_idx",
    "one_hot",
    "read_idx_images",
    "read_idx_labels",
    "split_subsets",
]

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class Dataset:
    """Inputs and targets of a supervised task.

    Rows of ``inputs`` and ``targets`` correspond to examples.
    """

    inputs: Matrix
    """K×D input matrix."""

    targets: Matrix
    """K×M target matrix, one-hot rows for classification."""

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise ContractViolationError("Inputs and targets must be 2-D")
        if self.inputs.shape[0] != self.targets.shape[0]:
            msg = (
                f"{self.inputs.shape[0]} inputs but"
                f" {self.targets.shape[0]} targets"
            )
            raise ContractViolationError(msg)

    @property
    def example_count(self) -> int:
        """Number of examples, K."""
        return int(self.inputs.shape[0])

    @property
    def input_width(self) -> int:
        """Width of an input row, D."""
        return int(self.inputs.shape[1])

    @property
    def output_width(self) -> int:
        """Width of a target row, M."""
        return int(self.targets.shape[1])

    def subset(self, indices: npt.NDArray[np.intp]) -> Dataset:
        """Select examples by index, preserving the given order."""
        return Dataset(self.inputs[indices], self.targets[indices])


def one_hot(labels: npt.NDArray[np.integer], classes: int) -> Matrix:
    """Encode integer labels as one-hot rows.

    Raises
    ------
    InvalidLabelError
        Raised if a label is negative or not below ``classes``.
    """
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        msg = f"Labels must lie in [0, {classes})"
        raise InvalidLabelError(msg)
    targets = np.zeros((labels.shape[0], classes), dtype=np.float64)
    targets[np.arange(labels.shape[0]), labels] = 1.0
    return targets


def _read_bytes(path: Path) -> bytes:
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as fh:
                return fh.read()
        return path.read_bytes()
    except (OSError, EOFError) as e:
        raise IngestError(f"Cannot read {path}: {e}") from e


def _read_header(
    data: bytes, path: Path, magic: int, dims: int
) -> tuple[int, ...]:
    size = 4 * (dims + 1)
    if len(data) < size:
        msg = f"{path}: header needs {size} bytes, file has {len(data)}"
        raise TruncatedFileError(msg)
    found, *shape = struct.unpack(f">{dims + 1}I", data[:size])
    if found != magic:
        msg = f"{path}: magic number 0x{found:08x}, expected 0x{magic:08x}"
        raise BadMagicError(msg)
    expected = size + int(np.prod(shape))
    if len(data) < expected:
        msg = f"{path}: expected {expected} bytes, file has {len(data)}"
        raise TruncatedFileError(msg)
    return tuple(shape)


def read_idx_images(path: Path) -> npt.NDArray[np.uint8]:
    """Read an IDX image file into a K×rows×columns byte array.

    Raises
    ------
    BadMagicError
        Raised if the file is not an unsigned-byte 3-D IDX file.
    TruncatedFileError
        Raised if the file is shorter than its header announces.
    """
    data = _read_bytes(path)
    count, rows, columns = _read_header(data, path, IDX_IMAGES_MAGIC, 3)
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16)
    return pixels[: count * rows * columns].reshape(count, rows, columns)


def read_idx_labels(path: Path) -> npt.NDArray[np.uint8]:
    """Read an IDX label file into a vector of bytes.

    Raises
    ------
    BadMagicError
        Raised if the file is not an unsigned-byte 1-D IDX file.
    TruncatedFileError
        Raised if the file is shorter than its header announces.
    """
    data = _read_bytes(path)
    (count,) = _read_header(data, path, IDX_LABELS_MAGIC, 1)
    return np.frombuffer(data, dtype=np.uint8, offset=8)[:count]


def load_idx(images_path: Path, labels_path: Path) -> Dataset:
    """Load an IDX image/label pair such as the MNIST distribution.

    Pixels are scaled to [0, 1] by dividing by 255 and labels are one-hot
    encoded over ten classes.

    Raises
    ------
    IngestError
        Raised if either file is malformed or the two disagree on the
        number of examples.  No partial dataset is returned.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        msg = (
            f"{images_path} has {images.shape[0]} images but {labels_path}"
            f" has {labels.shape[0]} labels"
        )
        raise CountMismatchError(msg)
    inputs = images.reshape(images.shape[0], -1).astype(np.float64)
    inputs /= PIXEL_SCALE
    targets = one_hot(labels.astype(np.intp), MNIST_CLASSES)
    logger.debug(
        "Loaded IDX dataset",
        images=str(images_path),
        examples=inputs.shape[0],
        width=inputs.shape[1],
    )
    return Dataset(inputs, targets)


def gen_synthetic_dataset(
    seed: int, examples: int, width: int, classes: int
) -> Dataset:
    """Generate a seeded classification task.

    Inputs are uniform in [0, 1]; each label is the argmax of a fixed random
    linear map of its input, so the task is learnable but not trivial.
    """
    rng = np.random.default_rng(seed)
    inputs = rng.uniform(0.0, 1.0, size=(examples, width))
    projection = rng.normal(size=(width, classes))
    scores = (inputs - 0.5) @ projection
    labels = np.argmax(scores, axis=1)
    return Dataset(inputs, one_hot(labels, classes))


def split_subsets(
    dataset: Dataset, train: int, validation: int, seed: int
) -> tuple[Dataset, Dataset]:
    """Draw disjoint seeded training and validation subsets.

    Raises
    ------
    ContractViolationError
        Raised if the dataset has fewer than ``train + validation`` examples.
    """
    if train + validation > dataset.example_count:
        msg = (
            f"Requested {train} + {validation} examples but only"
            f" {dataset.example_count} are available"
        )
        raise ContractViolationError(msg)
    order = np.random.default_rng(seed).permutation(dataset.example_count)
    return (
        dataset.subset(order[:train]),
        dataset.subset(order[train : train + validation]),
    )


def accuracy(predictions: Matrix, targets: Matrix) -> float:
    """Fraction of rows whose argmax matches the target argmax."""
    if predictions.shape[0] == 0:
        return 0.0
    hits = np.argmax(predictions, axis=1) == np.argmax(targets, axis=1)
    return float(np.mean(hits))
