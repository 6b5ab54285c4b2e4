"""Tests for process and experiment configuration."""

from __future__ import annotations

from pathlib import Path

import pytest

from twophase.config import (
    Config,
    DataSource,
    ExperimentConfig,
    ObjectiveKind,
    load_experiment,
)
from twophase.controller import Mode
from twophase.exceptions import UsageError
from twophase.handlers.artifacts import write_config


def test_defaults() -> None:
    experiment = load_experiment(None)
    assert experiment == ExperimentConfig()
    assert experiment.seed == 1
    assert experiment.objective == ObjectiveKind.mlp
    assert experiment.mode == Mode.two_phase
    assert experiment.model.dims == (784, 32, 10)
    assert experiment.twophase.gnfact == 0.9
    assert experiment.twophase.smoothing_window == 5
    assert experiment.adam.batch_size == 512


def test_load(experiment: ExperimentConfig) -> None:
    assert experiment.objective == ObjectiveKind.toy_tanh
    assert experiment.epochs == 80
    assert experiment.adam.lr == 0.2
    assert experiment.toy.x == 0.25


def test_load_errors(tmp_path: Path, data_dir: Path) -> None:
    with pytest.raises(UsageError, match="Cannot read"):
        load_experiment(tmp_path / "missing.yaml")

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(UsageError, match="mapping"):
        load_experiment(listing)

    broken = tmp_path / "broken.yaml"
    broken.write_text("epochs: [1,\n")
    with pytest.raises(UsageError, match="Cannot read"):
        load_experiment(broken)

    with pytest.raises(UsageError, match="learning_rate"):
        load_experiment(data_dir / "bad-key.yaml")

    invalid = tmp_path / "invalid.yaml"
    invalid.write_text("epochs: 1\n")
    with pytest.raises(UsageError, match="epochs"):
        load_experiment(invalid)

    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert load_experiment(empty) == ExperimentConfig()


def test_with_seed(experiment: ExperimentConfig) -> None:
    assert experiment.with_seed(None) is experiment
    reseeded = experiment.with_seed(7)
    assert reseeded.seed == 7
    assert reseeded.epochs == experiment.epochs
    with pytest.raises(UsageError):
        experiment.with_seed(-1)


def test_digest(experiment: ExperimentConfig, data_dir: Path) -> None:
    digest = experiment.digest()
    assert len(digest) == 16
    assert digest == load_experiment(data_dir / "toy.yaml").digest()
    assert digest != experiment.with_seed(2).digest()


def test_round_trip(experiment: ExperimentConfig, tmp_path: Path) -> None:
    path = write_config(tmp_path, experiment)
    first_line = path.read_text().splitlines()[0]
    assert first_line == f"# digest: {experiment.digest()}"
    reloaded = load_experiment(path)
    assert reloaded == experiment
    assert reloaded.digest() == experiment.digest()


def test_two_phase_config(experiment: ExperimentConfig) -> None:
    settings = experiment.two_phase_config()
    assert settings.total_epochs == 80
    assert settings.adam.lr == 0.2
    assert settings.seed == experiment.seed
    assert settings.cost_budget is None
    assert experiment.two_phase_config(12.5).cost_budget == 12.5

    capped = ExperimentConfig.model_validate(
        {"epochs": 10, "twophase": {"max_adam_epochs": 10}}
    )
    with pytest.raises(UsageError):
        capped.two_phase_config()


def test_output_width() -> None:
    synthetic = ExperimentConfig.model_validate({"model": {"dims": [4, 3]}})
    assert synthetic.output_width == 3
    mnist = ExperimentConfig.model_validate({"data": {"source": "mnist"}})
    assert mnist.data.source == DataSource.mnist
    assert mnist.output_width == 10


def test_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("TWOPHASE_THREADS", "3")
    monkeypatch.setenv("TWOPHASE_LOG_LEVEL", "DEBUG")
    settings = Config()
    assert settings.threads == 3
    assert settings.resolved_threads == 3
    assert settings.log_level.value == "DEBUG"

    monkeypatch.setenv("TWOPHASE_THREADS", "0")
    assert Config().resolved_threads >= 1
