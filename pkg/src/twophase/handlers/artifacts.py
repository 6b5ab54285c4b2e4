"""CSV and YAML artifacts written by the commands.

CSV files are UTF-8 with LF line endings and a header row.  Floats are
written with 17 significant digits so that they round-trip exactly, which
also makes reruns with the same configuration byte-identical.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import yaml

from ..config import ExperimentConfig
from ..constants import FLOAT_DIGITS
from ..diagnostics.trace import TrainingTrace

__all__ = [
    "EVENTS_COLUMNS",
    "TRACE_COLUMNS",
    "CsvValue",
    "format_value",
    "trace_rows",
    "write_config",
    "write_csv",
    "write_events",
    "write_trace",
]

CsvValue = float | int | str | bool | None
"""Type of a single CSV cell before formatting."""

TRACE_COLUMNS = (
    "epoch",
    "phase",
    "loss",
    "grad_norm",
    "gnmax",
    "cost_units",
)
"""Columns of a training trace."""

EVENTS_COLUMNS = ("epoch", "flag")
"""Columns of the per-epoch event list."""


def format_value(value: CsvValue) -> str:
    """Format one cell.

    Floats use 17 significant digits, booleans are written as ``true`` or
    ``false`` and missing values as an empty cell.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, f".{FLOAT_DIGITS}g")
    return str(value)


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Mapping[str, CsvValue]],
) -> Path:
    """Write rows under a header naming ``columns``.

    Returns
    -------
    Path
        The path written.
    """
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: format_value(row.get(c)) for c in columns})
    return path


def trace_rows(trace: TrainingTrace) -> list[dict[str, CsvValue]]:
    """Rows of a trace keyed by `TRACE_COLUMNS`."""
    return [
        {
            "epoch": row.epoch,
            "phase": row.phase.value,
            "loss": row.loss,
            "grad_norm": row.grad_norm,
            "gnmax": row.gnmax,
            "cost_units": row.cost_units,
        }
        for row in trace
    ]


def write_trace(path: Path, trace: TrainingTrace) -> Path:
    """Write a training trace."""
    return write_csv(path, TRACE_COLUMNS, trace_rows(trace))


def write_events(path: Path, trace: TrainingTrace) -> Path:
    """Write one row per flag raised during training, sorted per epoch."""
    rows = [
        {"epoch": row.epoch, "flag": flag.value}
        for row in trace
        for flag in sorted(row.flags)
    ]
    return write_csv(path, EVENTS_COLUMNS, rows)


def write_config(out_dir: Path, experiment: ExperimentConfig) -> Path:
    """Echo the resolved configuration as ``config.yaml``.

    The digest goes into a leading comment, so the file can be passed back
    as ``--config`` to repeat the run.
    """
    path = out_dir / "config.yaml"
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# digest: {experiment.digest()}\n")
        yaml.safe_dump(experiment.resolved(), fh, sort_keys=True)
    return path
