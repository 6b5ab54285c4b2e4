"""Tests for the twophase.handlers.compare module."""

from __future__ import annotations

import os
from pathlib import Path

import pytest
from structlog.stdlib import BoundLogger

from twophase.config import ExperimentConfig, load_experiment
from twophase.controller import Mode
from twophase.diagnostics.trace import Phase, TraceRow, TrainingTrace
from twophase.handlers.compare import (
    COMPARE_COLUMNS,
    cmd_compare,
    merge_by_cost,
    verdict,
)

from ..support.artifacts import read_csv


def make_trace(points: list[tuple[float, float]]) -> TrainingTrace:
    trace = TrainingTrace()
    for epoch, (cost, loss) in enumerate(points, start=1):
        trace.append(
            TraceRow(
                epoch=epoch,
                loss=loss,
                grad_norm=1.0,
                phase=Phase.adam,
                cost_units=cost,
            )
        )
    return trace


def test_merge_by_cost() -> None:
    traces = {
        Mode.adam_only: make_trace([(4.0, 1.0), (8.0, 0.5)]),
        Mode.cg_only: make_trace([(6.0, 2.0), (6.0, 1.5)]),
    }
    merged = merge_by_cost(traces)
    assert merged == [
        {"cost_units": 4.0, "adam_only": 1.0, "cg_only": None},
        {"cost_units": 6.0, "adam_only": 1.0, "cg_only": 1.5},
        {"cost_units": 8.0, "adam_only": 0.5, "cg_only": 1.5},
    ]


def test_verdict() -> None:
    traces = {
        Mode.adam_only: make_trace([(1.0, 0.5)]),
        Mode.cg_only: make_trace([(1.0, 0.9)]),
        Mode.two_phase: make_trace([(1.0, 0.1)]),
    }
    assert verdict(traces) == {
        "two_phase_le_adam_only": True,
        "cg_only_worst": True,
    }
    traces[Mode.two_phase] = make_trace([(1.0, 0.7)])
    assert verdict(traces) == {
        "two_phase_le_adam_only": False,
        "cg_only_worst": True,
    }


def test_quadratic(
    tmp_path: Path, data_dir: Path, logger: BoundLogger
) -> None:
    experiment = load_experiment(data_dir / "quadratic.yaml")
    written = cmd_compare(experiment, tmp_path, logger)
    assert {path.name for path in written} == {
        "config.yaml",
        "trace_adam_only.csv",
        "trace_cg_only.csv",
        "trace_two_phase.csv",
        "compare.csv",
        "verdict.csv",
    }

    adam = read_csv(tmp_path / "trace_adam_only.csv")
    cg = read_csv(tmp_path / "trace_cg_only.csv")
    two_phase = read_csv(tmp_path / "trace_two_phase.csv")
    assert len(adam) == 20
    budget = float(adam[-1]["cost_units"])
    assert budget == 80.0
    assert float(cg[0]["cost_units"]) <= budget
    assert float(cg[-1]["cost_units"]) <= budget
    assert float(two_phase[-1]["cost_units"]) <= budget
    assert any(row["phase"] == "cg" for row in two_phase)
    assert float(cg[-1]["loss"]) < float(adam[-1]["loss"])

    compare = read_csv(tmp_path / "compare.csv")
    assert tuple(compare[0]) == COMPARE_COLUMNS
    costs = [float(row["cost_units"]) for row in compare]
    assert costs == sorted(costs)
    assert len(set(costs)) == len(costs)

    checks = {
        row["check"]: row["passed"]
        for row in read_csv(tmp_path / "verdict.csv")
    }
    assert checks["two_phase_le_adam_only"] == "true"
    assert checks["cg_only_worst"] == "false"


def test_equal_budget(
    tmp_path: Path, data_dir: Path, logger: BoundLogger
) -> None:
    experiment = load_experiment(data_dir / "mlp.yaml")
    cmd_compare(experiment, tmp_path, logger)
    finals = {
        arm: read_csv(tmp_path / f"trace_{arm}.csv")[-1]
        for arm in ("adam_only", "cg_only", "two_phase")
    }
    budget = float(finals["adam_only"]["cost_units"])
    assert budget == 24.0
    for final in finals.values():
        assert float(final["cost_units"]) <= budget


@pytest.mark.slow
@pytest.mark.skipif(
    "TWOPHASE_MNIST_DIR" not in os.environ, reason="MNIST not available"
)
def test_mnist(tmp_path: Path, logger: BoundLogger) -> None:
    directory = Path(os.environ["TWOPHASE_MNIST_DIR"])
    images = next(directory.glob("train-images*"))
    labels = next(directory.glob("train-labels*"))
    wins = 0
    for seed in range(1, 6):
        experiment = ExperimentConfig.model_validate(
            {
                "seed": seed,
                "epochs": 60,
                "data": {
                    "source": "mnist",
                    "images": str(images),
                    "labels": str(labels),
                },
            }
        )
        out = tmp_path / str(seed)
        cmd_compare(experiment, out, logger)
        final = {
            arm: float(read_csv(out / f"trace_{arm}.csv")[-1]["loss"])
            for arm in ("adam_only", "cg_only", "two_phase")
        }
        if final["two_phase"] <= final["adam_only"] < final["cg_only"]:
            wins += 1
    assert wins >= 4
