"""Tests for dataset ingestion and subsetting."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from twophase.exceptions import (
    BadMagicError,
    ContractViolationError,
    CountMismatchError,
    IngestError,
    InvalidLabelError,
    TruncatedFileError,
)
from twophase.models.dataset import (
    Dataset,
    accuracy,
    gen_synthetic_dataset,
    load_idx,
    one_hot,
    read_idx_images,
    split_subsets,
)

from ..support.idx import idx_images_bytes, idx_labels_bytes, write_idx_pair


def test_load_idx(idx_pair: tuple[Path, Path]) -> None:
    dataset = load_idx(*idx_pair)
    assert dataset.example_count == 12
    assert dataset.input_width == 784
    assert dataset.output_width == 10
    assert np.all(dataset.inputs[3] == 60 / 255)
    assert np.argmax(dataset.targets[11]) == 1
    assert dataset.targets.sum() == 12.0


def test_idx_round_trip(tmp_path: Path) -> None:
    rng = np.random.default_rng(4)
    images = rng.integers(0, 256, size=(2, 28, 28), dtype=np.uint8)
    labels = np.array([7, 0], dtype=np.uint8)
    images_path, labels_path = write_idx_pair(tmp_path, images, labels)
    assert np.array_equal(read_idx_images(images_path), images)
    dataset = load_idx(images_path, labels_path)
    restored = np.rint(dataset.inputs * 255).astype(np.uint8)
    assert np.array_equal(restored.reshape(2, 28, 28), images)
    assert np.argmax(dataset.targets, axis=1).tolist() == [7, 0]


def test_bad_magic(idx_pair: tuple[Path, Path]) -> None:
    images, labels = idx_pair
    with pytest.raises(BadMagicError):
        load_idx(labels, labels)
    with pytest.raises(IngestError):
        load_idx(images, images)


def test_truncated(tmp_path: Path) -> None:
    images = np.zeros((2, 28, 28), dtype=np.uint8)
    path = tmp_path / "short-header"
    path.write_bytes(idx_images_bytes(images)[:10])
    with pytest.raises(TruncatedFileError):
        read_idx_images(path)
    path = tmp_path / "short-data"
    path.write_bytes(idx_images_bytes(images)[:-1])
    with pytest.raises(TruncatedFileError):
        read_idx_images(path)


def test_count_mismatch(tmp_path: Path) -> None:
    images_path = tmp_path / "images"
    labels_path = tmp_path / "labels"
    images_path.write_bytes(idx_images_bytes(np.zeros((3, 2, 2), np.uint8)))
    labels_path.write_bytes(idx_labels_bytes(np.zeros(2, np.uint8)))
    with pytest.raises(CountMismatchError):
        load_idx(images_path, labels_path)


def test_invalid_label(tmp_path: Path) -> None:
    images = np.zeros((2, 2, 2), dtype=np.uint8)
    labels = np.array([1, 12], dtype=np.uint8)
    with pytest.raises(InvalidLabelError):
        load_idx(*write_idx_pair(tmp_path, images, labels))


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(IngestError):
        load_idx(tmp_path / "missing", tmp_path / "missing")


def test_one_hot() -> None:
    targets = one_hot(np.array([2, 0]), 3)
    assert targets.tolist() == [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
    with pytest.raises(InvalidLabelError):
        one_hot(np.array([-1]), 3)


def test_dataset_validation() -> None:
    with pytest.raises(ContractViolationError):
        Dataset(np.zeros((3, 2)), np.zeros((2, 2)))
    with pytest.raises(ContractViolationError):
        Dataset(np.zeros(3), np.zeros((3, 1)))


def test_synthetic() -> None:
    a = gen_synthetic_dataset(3, 50, 6, 4)
    b = gen_synthetic_dataset(3, 50, 6, 4)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.targets, b.targets)
    assert a.targets.sum(axis=1).tolist() == [1.0] * 50
    assert np.all((a.inputs >= 0.0) & (a.inputs < 1.0))


def test_split_subsets() -> None:
    dataset = gen_synthetic_dataset(1, 100, 3, 2)
    dataset = Dataset(
        np.arange(100, dtype=np.float64).reshape(100, 1), dataset.targets
    )
    train, validation = split_subsets(dataset, 60, 30, seed=9)
    assert train.example_count == 60
    assert validation.example_count == 30
    seen = set(train.inputs[:, 0]) | set(validation.inputs[:, 0])
    assert len(seen) == 90

    again, _ = split_subsets(dataset, 60, 30, seed=9)
    assert np.array_equal(again.inputs, train.inputs)
    with pytest.raises(ContractViolationError):
        split_subsets(dataset, 80, 30, seed=9)


def test_accuracy() -> None:
    targets = one_hot(np.array([0, 1, 2, 1]), 3)
    predictions = np.array(
        [[0.9, 0.1, 0.0], [0.2, 0.7, 0.1], [0.5, 0.4, 0.1], [0.0, 1.0, 0.0]]
    )
    assert accuracy(predictions, targets) == 0.75
    assert accuracy(np.zeros((0, 3)), np.zeros((0, 3))) == 0.0


@pytest.mark.slow
@pytest.mark.skipif(
    "TWOPHASE_MNIST_DIR" not in os.environ, reason="MNIST not available"
)
def test_mnist() -> None:
    directory = Path(os.environ["TWOPHASE_MNIST_DIR"])
    images = next(directory.glob("train-images*"))
    labels = next(directory.glob("train-labels*"))
    dataset = load_idx(images, labels)
    assert dataset.example_count == 60000
    assert dataset.input_width == 784
    assert dataset.output_width == 10
