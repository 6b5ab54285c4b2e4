"""Per-epoch training records."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import StrEnum

from ..exceptions import ContractViolationError
from ..numerics import Vector

__all__ = ["Phase", "TraceFlag", "TraceRow", "TrainingTrace"]


class Phase(StrEnum):
    """Optimizer active during an epoch."""

    adam = "adam"
    cg = "cg"
    gd = "gd"
    """Plain gradient descent, used only by landscape diagnostics."""


class TraceFlag(StrEnum):
    """Noteworthy events attached to a trace row."""

    converged = "converged"
    forced_swap = "forced_swap"
    no_progress = "no_progress"
    stall = "stall"


@dataclass(frozen=True)
class TraceRow:
    """State after one epoch."""

    epoch: int
    """One-based epoch number."""

    loss: float
    """Full-batch loss after the epoch."""

    grad_norm: float
    """Full-batch gradient norm after the epoch."""

    phase: Phase
    """Optimizer that ran during the epoch."""

    cost_units: float
    """Cumulative cost in forward-pass equivalents."""

    gnmax: float = 0.0
    """Running maximum of the smoothed gradient norm."""

    flags: frozenset[TraceFlag] = frozenset()
    """Events recorded during the epoch."""


@dataclass
class TrainingTrace:
    """Append-only record of a training run.

    Rows must arrive with strictly increasing epochs, nondecreasing cost and
    nonnegative gradient norms; `append` rejects anything else.
    """

    seed: int = 0
    config_digest: str = ""
    rows: list[TraceRow] = field(default_factory=list)
    swap_epoch: int | None = None
    params: Vector | None = None
    """Parameters after the most recent epoch."""

    def __iter__(self) -> Iterator[TraceRow]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: TraceRow) -> None:
        """Add the row for the next epoch.

        Raises
        ------
        ContractViolationError
            Raised if the row would break the trace invariants.
        """
        if self.rows:
            last = self.rows[-1]
            if row.epoch <= last.epoch:
                msg = f"Epoch {row.epoch} does not follow {last.epoch}"
                raise ContractViolationError(msg)
            if row.cost_units < last.cost_units:
                raise ContractViolationError("Cost units must not decrease")
        if not row.grad_norm >= 0:
            msg = f"Invalid gradient norm {row.grad_norm}"
            raise ContractViolationError(msg)
        if row.phase == Phase.cg and self.swap_epoch is None:
            self.swap_epoch = row.epoch
        self.rows.append(row)

    @property
    def last(self) -> TraceRow:
        """Most recent row."""
        return self.rows[-1]

    def losses(self) -> list[float]:
        return [r.loss for r in self.rows]

    def grad_norms(self) -> list[float]:
        return [r.grad_norm for r in self.rows]

    def phases(self) -> list[Phase]:
        return [r.phase for r in self.rows]
