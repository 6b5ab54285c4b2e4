"""Local convexity probing through directional curvature.

The Hessian is never formed.  Its quadratic form along a unit direction is
estimated from a central difference of two gradient evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from ..exceptions import ContractViolationError, ProbeError
from ..models.objective import Objective
from ..numerics import Vector, axpy, dot, norm

__all__ = [
    "ConvexityProbe",
    "ConvexityReport",
    "directional_curvature",
    "probe_convexity",
]

_UNIT_TOLERANCE = 1e-9


class ConvexityProbe(BaseModel):
    """Settings of the curvature probe."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: Annotated[
        float,
        Field(
            title="Finite-difference step",
            description="Relative to the largest parameter magnitude, or"
            " absolute when all parameters are below one",
            gt=0,
        ),
    ] = 1e-5

    directions_per_point: Annotated[
        PositiveInt, Field(title="Random directions sampled per point")
    ] = 8


@dataclass(frozen=True)
class ConvexityReport:
    """Summary of the curvatures sampled at one point."""

    min_curvature: float
    mean_curvature: float
    positive_fraction: float
    """Share of sampled directions with positive curvature."""


def directional_curvature(
    objective: Objective,
    theta: Vector,
    d: Vector,
    probe: ConvexityProbe | None = None,
) -> float:
    """Estimate ``dᵀ H(theta) d`` for a unit direction ``d``.

    Parameters
    ----------
    objective
        Objective whose Hessian is probed.
    theta
        Probe point.
    d
        Unit direction.
    probe
        Probe settings.

    Returns
    -------
    float
        Central difference of the directional derivative along ``d``.

    Raises
    ------
    ContractViolationError
        Raised if ``d`` is not a unit vector.
    ProbeError
        Raised if the objective is not finite at a probe point.
    """
    probe = probe or ConvexityProbe()
    if abs(norm(d) - 1.0) > _UNIT_TOLERANCE:
        msg = f"Probe direction has norm {norm(d)}, expected 1"
        raise ContractViolationError(msg)
    scale = max(1.0, float(np.max(np.abs(theta))))
    eps = probe.epsilon * scale
    loss_plus, grad_plus = objective.loss_grad(axpy(eps, d, theta))
    loss_minus, grad_minus = objective.loss_grad(axpy(-eps, d, theta))
    curvature = dot(d, grad_plus - grad_minus) / (2.0 * eps)
    if not all(map(math.isfinite, (loss_plus, loss_minus, curvature))):
        raise ProbeError(f"Objective not finite within {eps} of probe point")
    return curvature


def probe_convexity(
    objective: Objective,
    theta: Vector,
    probe: ConvexityProbe | None = None,
    seed: int = 0,
) -> ConvexityReport:
    """Sample the curvature along random unit directions.

    One-dimensional objectives are probed along ``+1`` only, since the
    curvature does not depend on the sign of the direction.
    """
    probe = probe or ConvexityProbe()
    if theta.shape[0] == 1:
        directions = [np.ones(1)]
    else:
        rng = np.random.default_rng(seed)
        directions = []
        for _ in range(probe.directions_per_point):
            d = rng.normal(size=theta.shape[0])
            directions.append(d / norm(d))
    curvatures = [
        directional_curvature(objective, theta, d, probe) for d in directions
    ]
    positive = sum(1 for c in curvatures if c > 0.0)
    return ConvexityReport(
        min_curvature=min(curvatures),
        mean_curvature=math.fsum(curvatures) / len(curvatures),
        positive_fraction=positive / len(curvatures),
    )
