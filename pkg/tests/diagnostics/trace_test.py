"""Tests for training traces."""

from __future__ import annotations

import pytest

from twophase.diagnostics.trace import (
    Phase,
    TraceFlag,
    TraceRow,
    TrainingTrace,
)
from twophase.exceptions import ContractViolationError


def row(
    epoch: int,
    phase: Phase = Phase.adam,
    cost: float | None = None,
    grad_norm: float = 1.0,
) -> TraceRow:
    return TraceRow(
        epoch=epoch,
        loss=1.0 / epoch,
        grad_norm=grad_norm,
        phase=phase,
        cost_units=float(epoch) if cost is None else cost,
    )


def test_append() -> None:
    trace = TrainingTrace(seed=3)
    trace.append(row(1))
    trace.append(row(2))
    assert trace.swap_epoch is None
    trace.append(row(3, Phase.cg))
    trace.append(row(4, Phase.cg))
    assert trace.swap_epoch == 3
    assert len(trace) == 4
    assert trace.last.epoch == 4
    assert trace.losses() == [1.0, 0.5, 1.0 / 3, 0.25]
    assert trace.grad_norms() == [1.0] * 4
    assert trace.phases() == [Phase.adam] * 2 + [Phase.cg] * 2
    assert [r.epoch for r in trace] == [1, 2, 3, 4]


def test_invariants() -> None:
    trace = TrainingTrace()
    trace.append(row(2, cost=5.0))
    with pytest.raises(ContractViolationError, match="does not follow"):
        trace.append(row(2, cost=6.0))
    with pytest.raises(ContractViolationError, match="Cost"):
        trace.append(row(3, cost=4.0))
    with pytest.raises(ContractViolationError, match="gradient norm"):
        trace.append(row(3, cost=6.0, grad_norm=-1.0))
    with pytest.raises(ContractViolationError, match="gradient norm"):
        trace.append(row(3, cost=6.0, grad_norm=float("nan")))
    assert len(trace) == 1


def test_flags() -> None:
    flagged = TraceRow(
        epoch=1,
        loss=0.0,
        grad_norm=0.0,
        phase=Phase.cg,
        cost_units=0.0,
        flags=frozenset({TraceFlag.converged}),
    )
    assert TraceFlag.converged in flagged.flags
    assert row(1).flags == frozenset()
