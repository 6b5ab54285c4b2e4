"""Adam: adaptive moment estimation for mini-batch training."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from ..constants import DEFAULT_BATCH_SIZE
from ..exceptions import ContractViolationError
from ..numerics import Vector

__all__ = ["AdamConfig", "AdamState", "adam_step"]


class AdamConfig(BaseModel):
    """Adam hyperparameters.

    Values other than the batch size default to those published with the
    method.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    lr: Annotated[float, Field(title="Step size", gt=0)] = 1e-3

    beta1: Annotated[
        float, Field(title="First-moment decay rate", ge=0, lt=1)
    ] = 0.9

    beta2: Annotated[
        float, Field(title="Second-moment decay rate", ge=0, lt=1)
    ] = 0.999

    eps: Annotated[
        float, Field(title="Denominator offset", gt=0)
    ] = 1e-8

    batch_size: Annotated[
        PositiveInt, Field(title="Examples per mini-batch")
    ] = DEFAULT_BATCH_SIZE


@dataclass(frozen=True)
class AdamState:
    """Moment estimates and step counter."""

    m: Vector
    """Biased first-moment estimate."""

    v: Vector
    """Biased elementwise second-moment estimate."""

    t: int = 0
    """Number of steps taken."""

    @classmethod
    def zeros(cls, dimension: int) -> AdamState:
        """Initial state for a parameter vector of the given length."""
        return cls(np.zeros(dimension), np.zeros(dimension), 0)


def adam_step(
    state: AdamState, config: AdamConfig, params: Vector, grad: Vector
) -> tuple[Vector, AdamState]:
    """Take one bias-corrected Adam step.

    Parameters
    ----------
    state
        Moments from the previous step.
    config
        Hyperparameters.
    params
        Current parameters.
    grad
        Gradient at ``params``.

    Returns
    -------
    tuple of Vector and AdamState
        Updated parameters and moments.  Inputs are not modified.
    """
    if not (params.shape == grad.shape == state.m.shape):
        msg = (
            f"Dimension mismatch: params {params.shape}, gradient"
            f" {grad.shape}, state {state.m.shape}"
        )
        raise ContractViolationError(msg)
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grad
    v = config.beta2 * state.v + (1.0 - config.beta2) * (grad * grad)
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    update = config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return params - update, AdamState(m, v, t)
