"""The ``compare`` command: Adam-only, CG-only and two-phase on one budget."""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path

from structlog.stdlib import BoundLogger

from ..config import ExperimentConfig
from ..controller import Mode
from ..dependencies.data import workload_dependency
from ..diagnostics.trace import TrainingTrace
from .artifacts import CsvValue, write_config, write_csv, write_trace
from .train import train_workload

__all__ = [
    "ARMS",
    "COMPARE_COLUMNS",
    "VERDICT_COLUMNS",
    "cmd_compare",
    "merge_by_cost",
    "verdict",
]

ARMS = (Mode.adam_only, Mode.cg_only, Mode.two_phase)
"""Arms of the comparison, in the order they are run."""

COMPARE_COLUMNS = ("cost_units", "adam_only", "cg_only", "two_phase")

VERDICT_COLUMNS = ("check", "passed")


def _column(mode: Mode) -> str:
    return mode.value.replace("-", "_")


def merge_by_cost(
    traces: Mapping[Mode, TrainingTrace],
) -> list[dict[str, CsvValue]]:
    """Merge traces onto the union of their cost points.

    Each arm's loss is held constant from one of its rows to the next, so a
    cell holds the loss of the latest row of that arm whose cost does not
    exceed the row's cost.  Cells before an arm's first row are empty.
    """
    costs = sorted({row.cost_units for t in traces.values() for row in t})
    merged: list[dict[str, CsvValue]] = []
    cursors = dict.fromkeys(traces, 0)
    for cost in costs:
        row: dict[str, CsvValue] = {"cost_units": cost}
        for mode, trace in traces.items():
            i = cursors[mode]
            while i < len(trace) and trace.rows[i].cost_units <= cost:
                i += 1
            cursors[mode] = i
            row[_column(mode)] = trace.rows[i - 1].loss if i else None
        merged.append(row)
    return merged


def verdict(traces: Mapping[Mode, TrainingTrace]) -> dict[str, bool]:
    """Acceptance checks on the final losses of the three arms."""
    final = {mode: trace.last.loss for mode, trace in traces.items()}
    two_phase = final[Mode.two_phase]
    adam_only = final[Mode.adam_only]
    cg_only = final[Mode.cg_only]
    return {
        "two_phase_le_adam_only": two_phase <= adam_only,
        "cg_only_worst": cg_only >= max(two_phase, adam_only),
    }


def cmd_compare(
    experiment: ExperimentConfig, out_dir: Path, logger: BoundLogger
) -> list[Path]:
    """Run the three training arms from one starting point.

    Adam-only runs first.  Unless ``compare.cost_budget`` is set, its final
    cost becomes the budget of the other two arms.  No arm records an epoch
    ending past the budget, so the final losses compared by the verdict
    were all bought for at most the same cost.
    Writes ``compare.csv``, ``verdict.csv`` and one ``trace_<mode>.csv`` per
    arm.  A failed check is reported, not raised.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_config(out_dir, experiment)]
    workload = workload_dependency(experiment)
    budget = experiment.compare.cost_budget
    traces: dict[Mode, TrainingTrace] = {}
    for mode in ARMS:
        trace = train_workload(experiment, workload, mode, budget)
        traces[mode] = trace
        if budget is None:
            budget = trace.last.cost_units
        logger.info(
            "Finished arm",
            mode=mode.value,
            epochs=len(trace),
            final_loss=trace.last.loss,
            cost_units=trace.last.cost_units,
            budget=budget,
        )
        path = out_dir / f"trace_{_column(mode)}.csv"
        written.append(write_trace(path, trace))

    written.append(
        write_csv(
            out_dir / "compare.csv", COMPARE_COLUMNS, merge_by_cost(traces)
        )
    )
    checks = verdict(traces)
    rows = [{"check": k, "passed": v} for k, v in checks.items()]
    written.append(write_csv(out_dir / "verdict.csv", VERDICT_COLUMNS, rows))
    for check, passed in checks.items():
        if passed:
            logger.info("Check passed", check=check)
        else:
            logger.warning("Check failed", check=check)
    return written
