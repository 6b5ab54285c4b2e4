"""One-dimensional toy models whose loss landscapes can be plotted.

Both families map a scalar parameter ``p`` to a square loss, so they share
the same landscape interface: ``(loss, dloss_dp) = f(p, task)``.
"""

from __future__ import annotations

import math
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from ..constants import TOY_UNITS
from ..exceptions import ContractViolationError

__all__ = [
    "ToyTanhTask",
    "TwoLayerTask",
    "gen_toy_tasks",
    "toy_loss_grad",
    "twolayer_loss_grad",
]


class ToyTanhTask(BaseModel):
    """Single nonlinear layer of identical tanh units fitted to one target.

    The model output is ``units * tanh(p * x)``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    x: Annotated[
        float,
        Field(title="Input argument", gt=-0.5, lt=0.5),
    ]

    r: Annotated[float, Field(title="Reference output", allow_inf_nan=False)]

    units: Annotated[PositiveInt, Field(title="Number of tanh units")] = (
        TOY_UNITS
    )


class TwoLayerTask(BaseModel):
    """Two stacked tanh layers with a weighted second branch.

    The hidden value is ``h = tanh(p * x)`` and the output is
    ``tanh(h) + c * tanh(-2 h)``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    x: Annotated[float, Field(title="Input", allow_inf_nan=False)]

    r: Annotated[float, Field(title="Reference output", allow_inf_nan=False)]

    c: Annotated[
        float, Field(title="Second-branch weight", allow_inf_nan=False)
    ]


def toy_loss_grad(p: float, task: ToyTanhTask) -> tuple[float, float]:
    """Square loss of the single-layer toy model and its derivative in p."""
    t = math.tanh(p * task.x)
    residual = task.units * t - task.r
    loss = residual * residual
    grad = 2.0 * residual * task.units * task.x * (1.0 - t * t)
    return loss, grad


def twolayer_loss_grad(p: float, task: TwoLayerTask) -> tuple[float, float]:
    """Square loss of the two-layer toy model and its derivative in p."""
    h = math.tanh(p * task.x)
    t1 = math.tanh(h)
    t2 = math.tanh(-2.0 * h)
    residual = t1 + task.c * t2 - task.r
    dy_dh = (1.0 - t1 * t1) - 2.0 * task.c * (1.0 - t2 * t2)
    dh_dp = task.x * (1.0 - h * h)
    return residual * residual, 2.0 * residual * dy_dh * dh_dp


def gen_toy_tasks(seed: int, n: int) -> list[ToyTanhTask]:
    """Draw random single-layer toy tasks.

    Inputs are uniform in (-0.5, 0.5) and references uniform in (0, 1).
    Draws that land exactly on an excluded boundary are repeated.

    Parameters
    ----------
    seed
        Seed of the random generator; equal seeds give equal task lists.
    n
        Number of tasks.
    """
    if n < 1:
        raise ContractViolationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    tasks = []
    while len(tasks) < n:
        x = float(rng.uniform(-0.5, 0.5))
        r = float(rng.uniform(0.0, 1.0))
        if x == -0.5 or r == 0.0:
            continue
        tasks.append(ToyTanhTask(x=x, r=r))
    return tasks
