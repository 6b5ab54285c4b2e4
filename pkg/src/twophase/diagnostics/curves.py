"""Gradient-norm curves, landscape scans and the overdetermination ratio."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..constants import (
    DEFAULT_SMOOTHING_WINDOW,
    TOY_MARGIN_ARGUMENT,
    TRAJECTORY_MAX_HALVINGS,
    TRAJECTORY_STEP_CAP,
    ZERO_GRADIENT_FACTOR,
)
from ..controller import smooth
from ..exceptions import ContractViolationError
from ..models.objective import MeteredObjective, Objective
from ..models.toy import ToyTanhTask, TwoLayerTask
from .cost import CostMeter
from .trace import Phase, TraceFlag, TraceRow, TrainingTrace

__all__ = [
    "DescentPath",
    "convex_regions",
    "count_peaks",
    "descent_trajectory",
    "grad_vs_loss",
    "local_minima",
    "overdetermination_q",
    "toy_margin",
]


def overdetermination_q(k: int, m: int, p: int) -> float:
    """Ratio of training constraints ``K·M`` to trainable parameters ``P``.

    Raises
    ------
    ContractViolationError
        Raised if ``p`` is not positive.
    """
    if p < 1:
        raise ContractViolationError(f"Parameter count must be positive: {p}")
    return k * m / p


def grad_vs_loss(trace: TrainingTrace) -> list[tuple[float, float]]:
    """Pairs of loss and gradient norm, ordered by decreasing loss.

    Rows with equal loss keep their epoch order.
    """
    if not trace.rows:
        raise ContractViolationError("Trace is empty")
    pairs = [(row.loss, row.grad_norm) for row in trace]
    return sorted(pairs, key=lambda pair: pair[0], reverse=True)


def count_peaks(
    series: Sequence[float], window: int = DEFAULT_SMOOTHING_WINDOW
) -> int:
    """Count interior local maxima of the smoothed series.

    The series is smoothed with the same trailing mean the swap detector
    uses.  A peak is a strict rise followed by a strict fall; flat stretches
    in between are ignored.
    """
    if not series:
        raise ContractViolationError("Cannot count peaks of an empty series")
    values = list(series)
    smoothed = [smooth(values[: i + 1], window) for i in range(len(values))]
    signs = [
        1 if b > a else -1
        for a, b in zip(smoothed[:-1], smoothed[1:], strict=True)
        if b != a
    ]
    return sum(
        1
        for a, b in zip(signs[:-1], signs[1:], strict=True)
        if a > 0 and b < 0
    )


def local_minima(grid_gradient: Sequence[float]) -> list[int]:
    """Indices where a gridded derivative changes sign from − to +.

    Zeros are skipped, so the index returned is that of the first positive
    value after the crossing.
    """
    minima = []
    previous = 0
    for i, g in enumerate(grid_gradient):
        if g == 0:
            continue
        sign = 1 if g > 0 else -1
        if previous < 0 < sign:
            minima.append(i)
        previous = sign
    return minima


def convex_regions(curvature: Sequence[float]) -> int:
    """Number of maximal runs of positive curvature."""
    runs = 0
    inside = False
    for c in curvature:
        if c > 0 and not inside:
            runs += 1
        inside = c > 0
    return runs


def toy_margin(task: ToyTanhTask | TwoLayerTask, side: int = 1) -> float:
    """Parameter at the saturated margin of a toy landscape.

    Parameters
    ----------
    task
        Toy task.  Its input must be nonzero.
    side
        ``1`` for the margin at positive ``p * x``, ``-1`` for the one at
        negative ``p * x``.
    """
    if task.x == 0.0:
        raise ContractViolationError("Toy task with x = 0 has no margin")
    if side not in (1, -1):
        raise ContractViolationError(f"Invalid side {side}")
    return side * TOY_MARGIN_ARGUMENT / task.x


@dataclass
class DescentPath:
    """Trajectory of a one-dimensional gradient descent."""

    trace: TrainingTrace = field(default_factory=TrainingTrace)
    points: list[float] = field(default_factory=list)
    """Parameter at every trace row."""


def descent_trajectory(
    objective: Objective, start: float, max_epochs: int = 10_000
) -> DescentPath:
    """Follow gradient descent on a one-dimensional objective.

    The rate starts so that the first step moves a fixed fraction of the
    starting point and no step is ever longer than that.  Whenever a step
    would carry the parameter across a sign change of the gradient, the step
    and the rate are halved, so the path approaches the minimum from one
    side and the loss decreases monotonically.  The first row records the
    starting point; the run stops once the gradient norm is below
    ``1e-10 × max(1, initial norm)``.

    Parameters
    ----------
    objective
        One-dimensional objective.
    start
        Starting parameter.
    max_epochs
        Maximum number of rows.

    Returns
    -------
    DescentPath
        Trace of the descent and the parameter of every row.
    """
    if objective.dimension != 1:
        msg = f"Expected 1 parameter, got {objective.dimension}"
        raise ContractViolationError(msg)
    meter = CostMeter(objective.example_count)
    metered = MeteredObjective(objective, meter)
    path = DescentPath()
    p = np.array([start], dtype=np.float64)
    loss, grad = metered.loss_grad(p)
    g = float(grad[0])
    threshold = ZERO_GRADIENT_FACTOR * max(1.0, abs(g))
    cap = TRAJECTORY_STEP_CAP * max(1.0, abs(start))
    rate = cap / abs(g) if g != 0.0 else 0.0
    for epoch in range(1, max_epochs + 1):
        converged = abs(g) < threshold
        flags = frozenset({TraceFlag.converged}) if converged else frozenset()
        path.trace.append(
            TraceRow(
                epoch=epoch,
                loss=loss,
                grad_norm=abs(g),
                phase=Phase.gd,
                cost_units=meter.cost_units,
                flags=flags,
            )
        )
        path.points.append(float(p[0]))
        path.trace.params = p
        if converged:
            break
        step = float(np.clip(-rate * g, -cap, cap))
        for _ in range(TRAJECTORY_MAX_HALVINGS):
            trial = p + step
            trial_loss, trial_grad = metered.loss_grad(trial)
            trial_g = float(trial_grad[0])
            if trial_g == 0.0 or (trial_g > 0) == (g > 0):
                break
            step /= 2.0
            rate = abs(step / g)
        else:
            break
        p, loss, g = trial, trial_loss, trial_g
    return path
