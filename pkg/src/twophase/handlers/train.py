"""The ``train`` command: one training run with its summary."""

from __future__ import annotations

from pathlib import Path

from structlog.stdlib import BoundLogger

from ..config import ExperimentConfig
from ..controller import EpochObserver, Mode, run_baseline, run_two_phase
from ..dependencies.data import Workload, workload_dependency
from ..diagnostics.convexity import probe_convexity
from ..diagnostics.cost import CostMeter
from ..diagnostics.curves import overdetermination_q
from ..diagnostics.trace import TraceRow, TrainingTrace
from ..exceptions import NonFiniteLossError
from ..models.dataset import Dataset, accuracy
from ..numerics import Vector
from .artifacts import (
    CsvValue,
    write_config,
    write_csv,
    write_events,
    write_trace,
)

__all__ = [
    "CONVEXITY_COLUMNS",
    "SUMMARY_COLUMNS",
    "ConvexityRecorder",
    "cmd_train",
    "summarize",
    "train_workload",
]

SUMMARY_COLUMNS = (
    "final_train_mse",
    "final_train_acc",
    "final_val_mse",
    "final_val_acc",
    "Q",
    "swap_epoch",
)

CONVEXITY_COLUMNS = (
    "epoch",
    "phase",
    "loss",
    "min_curvature",
    "mean_curvature",
    "positive_fraction",
)


class ConvexityRecorder:
    """Epoch observer that probes the curvature at regular intervals.

    The probes evaluate the workload's objective directly, so they are not
    charged to the run's cost meter.
    """

    def __init__(
        self, workload: Workload, experiment: ExperimentConfig
    ) -> None:
        self._objective = workload.objective
        self._every = experiment.probe.every
        self._probe = experiment.probe.probe()
        self._seed = experiment.seed
        self.rows: list[dict[str, CsvValue]] = []

    def __call__(self, row: TraceRow, params: Vector) -> None:
        if row.epoch % self._every != 0:
            return
        report = probe_convexity(
            self._objective, params, self._probe, self._seed + row.epoch
        )
        self.rows.append(
            {
                "epoch": row.epoch,
                "phase": row.phase.value,
                "loss": row.loss,
                "min_curvature": report.min_curvature,
                "mean_curvature": report.mean_curvature,
                "positive_fraction": report.positive_fraction,
            }
        )


def train_workload(
    experiment: ExperimentConfig,
    workload: Workload,
    mode: Mode,
    cost_budget: float | None = None,
    observer: EpochObserver | None = None,
) -> TrainingTrace:
    """Train a workload in the given mode with a fresh cost meter."""
    config = experiment.two_phase_config(cost_budget)
    meter = CostMeter(workload.objective.example_count)
    if mode == Mode.two_phase:
        trace = run_two_phase(
            workload.objective, workload.initial, config, meter, observer
        )
    else:
        trace = run_baseline(
            mode, workload.objective, workload.initial, config, meter, observer
        )
    trace.config_digest = experiment.digest()
    return trace


def _mse_acc(
    workload: Workload, params: Vector, dataset: Dataset | None
) -> tuple[float | None, float | None]:
    if dataset is None or dataset.example_count == 0:
        return None, None
    predictions = workload.predictions(params, dataset)
    mse = workload.mse(params, dataset)
    return mse, accuracy(predictions, dataset.targets)


def summarize(
    workload: Workload, trace: TrainingTrace
) -> dict[str, CsvValue]:
    """Final errors, overdetermination and swap epoch of a run.

    Accuracy and validation cells are left empty for objectives without a
    dataset, whose training error is the final loss.
    """
    summary: dict[str, CsvValue] = {
        "Q": overdetermination_q(
            workload.objective.example_count,
            workload.output_width,
            workload.objective.dimension,
        ),
        "swap_epoch": trace.swap_epoch,
    }
    if workload.train is None or trace.params is None:
        summary["final_train_mse"] = trace.last.loss if trace.rows else None
        return summary
    train_mse, train_acc = _mse_acc(workload, trace.params, workload.train)
    val_mse, val_acc = _mse_acc(workload, trace.params, workload.validation)
    summary.update(
        final_train_mse=train_mse,
        final_train_acc=train_acc,
        final_val_mse=val_mse,
        final_val_acc=val_acc,
    )
    return summary


def cmd_train(
    experiment: ExperimentConfig, out_dir: Path, logger: BoundLogger
) -> list[Path]:
    """Train the configured objective and write the run's artifacts.

    Writes ``config.yaml``, ``trace.csv``, ``events.csv`` and
    ``summary.csv``, plus ``convexity.csv`` when probing is enabled.

    Raises
    ------
    ContractViolationError
        Raised if the starting parameters are not finite.
    IngestError
        Raised if the training data cannot be read.
    NonFiniteLossError
        Raised if the loss or gradient norm becomes non-finite.  The rows
        recorded until then are written to ``trace.csv`` first.
    UsageError
        Raised if the settings are invalid.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_config(out_dir, experiment)]
    workload = workload_dependency(experiment)
    recorder = None
    if experiment.probe.every > 0:
        recorder = ConvexityRecorder(workload, experiment)
    logger.info(
        "Training",
        objective=experiment.objective.value,
        mode=experiment.mode.value,
        parameters=workload.objective.dimension,
        examples=workload.objective.example_count,
    )
    try:
        trace = train_workload(
            experiment, workload, experiment.mode, observer=recorder
        )
    except NonFiniteLossError as e:
        if e.trace is not None:
            write_trace(out_dir / "trace.csv", e.trace)
            logger.error(
                "Wrote partial trace", out=str(out_dir), epochs=len(e.trace)
            )
        raise

    written.append(write_trace(out_dir / "trace.csv", trace))
    written.append(write_events(out_dir / "events.csv", trace))
    summary = summarize(workload, trace)
    written.append(
        write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, [summary])
    )
    if recorder is not None:
        written.append(
            write_csv(
                out_dir / "convexity.csv", CONVEXITY_COLUMNS, recorder.rows
            )
        )
    logger.info(
        "Training finished",
        epochs=len(trace),
        final_loss=trace.last.loss if trace.rows else None,
        swap_epoch=trace.swap_epoch,
        cost_units=trace.last.cost_units if trace.rows else 0.0,
    )
    return written
