"""Test fixtures for twophase tests."""

from __future__ import annotations

from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest
import structlog
from structlog.stdlib import BoundLogger

from twophase.config import ExperimentConfig, config, load_experiment
from twophase.dependencies.data import dataset_dependency

from .support.idx import write_idx_pair


@pytest.fixture(autouse=True)
def single_thread(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Evaluate on one thread and start every test with an empty cache."""
    monkeypatch.setattr(config, "threads", 1)
    dataset_dependency.clear()
    yield
    dataset_dependency.clear()


@pytest.fixture
def logger() -> BoundLogger:
    return structlog.get_logger("twophase")


@pytest.fixture
def data_dir() -> Path:
    return Path(__file__).parent / "data"


@pytest.fixture
def experiment(data_dir: Path) -> Iterator[ExperimentConfig]:
    """The single-layer toy experiment of the test data directory."""
    yield load_experiment(data_dir / "toy.yaml")


@pytest.fixture
def idx_pair(tmp_path: Path) -> tuple[Path, Path]:
    """Write a tiny 12-image IDX pair of 28×28 digits.

    Image ``i`` has every pixel set to ``20 * i`` and label ``i % 10``.
    """
    images = np.stack(
        [np.full((28, 28), 20 * i, dtype=np.uint8) for i in range(12)]
    )
    labels = np.array([i % 10 for i in range(12)], dtype=np.uint8)
    return write_idx_pair(tmp_path, images, labels, compress=True)
