"""Nonlinear conjugate gradient with golden-section line search.

Each step computes one full-batch gradient.  Line searches evaluate the loss
only, so their cost is forward passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import Annotated

import structlog
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from ..constants import SHRINK_PROBES, STALL_EPOCHS, ZERO_GRADIENT_FACTOR
from ..diagnostics.cost import CostMeter
from ..diagnostics.trace import Phase, TraceFlag, TraceRow, TrainingTrace
from ..exceptions import (
    ContractViolationError,
    NoBracketError,
    NonFiniteLossError,
)
from ..models.objective import MeteredObjective, Objective
from ..numerics import Vector, axpy, dot, norm
from .linesearch import LineSearchConfig, bracket_minimum, golden_section

__all__ = [
    "CgBeta",
    "CgConfig",
    "CgState",
    "CgStepResult",
    "cg_minimize",
    "cg_step",
    "step_flags",
]

logger = structlog.get_logger(__name__)


class CgBeta(StrEnum):
    """Rule for the conjugacy coefficient."""

    polak_ribiere = "polak-ribiere"
    fletcher_reeves = "fletcher-reeves"


class CgConfig(BaseModel):
    """Settings of the conjugate gradient method."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: Annotated[
        CgBeta,
        Field(
            title="Conjugacy rule",
            description="Polak-Ribière is clamped at zero (PR+)",
        ),
    ] = CgBeta.polak_ribiere

    restart_every: Annotated[
        PositiveInt | None,
        Field(
            title="Restart period",
            description="Iterations between steepest-descent restarts,"
            " defaulting to the parameter dimension",
        ),
    ] = None


@dataclass(frozen=True)
class CgState:
    """Memory carried between conjugate gradient steps."""

    g_prev: Vector | None = None
    """Gradient at the previous point."""

    d: Vector | None = None
    """Previous search direction."""

    iters_since_restart: int = 0
    """Directions built since the last steepest-descent restart."""

    loss: float | None = None
    """Loss at the current point, if already known."""

    grad: Vector | None = None
    """Gradient at the current point, if already known."""

    zero_threshold: float | None = None
    """Gradient norm below which the run counts as converged."""

    step: float | None = None
    """Last accepted step length, reused as the next initial step."""

    @classmethod
    def at(cls, loss: float, grad: Vector) -> CgState:
        """Start from a point whose loss and gradient are already known."""
        return cls(loss=loss, grad=grad)


@dataclass(frozen=True)
class CgStepResult:
    """Outcome of one conjugate gradient step."""

    params: Vector
    state: CgState
    loss: float
    grad_norm: float
    converged: bool = False
    """The gradient norm was already below the zero threshold."""

    no_bracket: bool = False
    """No line search, including the steepest-descent retry, found descent."""

    progressed: bool = True
    """The step changed the parameters."""


def _beta(grad: Vector, g_prev: Vector, rule: CgBeta) -> float:
    denominator = dot(g_prev, g_prev)
    if denominator == 0.0:
        return 0.0
    if rule == CgBeta.fletcher_reeves:
        return dot(grad, grad) / denominator
    return max(0.0, dot(grad, grad - g_prev) / denominator)


def _direction(
    state: CgState, grad: Vector, config: CgConfig
) -> tuple[Vector, int]:
    restart_every = config.restart_every or grad.shape[0]
    if (
        state.d is None
        or state.g_prev is None
        or state.iters_since_restart >= restart_every
    ):
        return -grad, 1
    d = axpy(_beta(grad, state.g_prev, config.beta), state.d, -grad)
    if dot(d, grad) >= 0.0:
        return -grad, 1
    return d, state.iters_since_restart + 1


def _line_minimize(
    objective: Objective,
    params: Vector,
    direction: Vector,
    loss: float,
    ls: LineSearchConfig,
    initial_step: float,
) -> tuple[float, float]:
    if ls.exact:
        step = objective.exact_step(params, direction)
        if step is not None and step > 0.0:
            return step, objective.loss(axpy(step, direction, params))

    def phi(alpha: float) -> float:
        return objective.loss(axpy(alpha, direction, params))

    config = ls.model_copy(update={"initial_step": initial_step})
    bracket = bracket_minimum(phi, config, phi0=loss)
    result = golden_section(phi, bracket.a, bracket.b, bracket.c, ls)
    if bracket.fb < result.value:
        return bracket.b, bracket.fb
    return result.alpha, result.value


def cg_step(
    state: CgState,
    params: Vector,
    objective: Objective,
    ls: LineSearchConfig,
    config: CgConfig | None = None,
) -> CgStepResult:
    """Take one conjugate gradient step.

    The direction is ``-g + beta * d_prev``, reset to steepest descent when
    it is not a descent direction or after ``restart_every`` iterations.  The
    step length comes from bracketing plus golden section along it.  If no
    bracket is found, a steepest-descent step with half the initial step is
    tried.  The loss never increases: a step that would not decrease it is
    rejected and the parameters are returned unchanged.  A failed or
    rejected search leaves a smaller initial step in the returned state, so
    the next step probes below the lengths that already failed.

    Parameters
    ----------
    state
        Memory from the previous step, or a fresh `CgState`.
    params
        Current parameters.
    objective
        Full-batch objective.
    ls
        Line-search settings.
    config
        Conjugate gradient settings.

    Returns
    -------
    CgStepResult
        New parameters and state with the loss and gradient norm there.
    """
    config = config or CgConfig()
    if state.loss is None or state.grad is None:
        loss, grad = objective.loss_grad(params)
    else:
        loss, grad = state.loss, state.grad
    grad_norm = norm(grad)
    if not (math.isfinite(loss) and math.isfinite(grad_norm)):
        return CgStepResult(params, state, loss, grad_norm, progressed=False)
    threshold = state.zero_threshold
    if threshold is None:
        threshold = ZERO_GRADIENT_FACTOR * max(1.0, grad_norm)
    if grad_norm < threshold:
        converged = replace(
            state, loss=loss, grad=grad, zero_threshold=threshold
        )
        return CgStepResult(
            params,
            converged,
            loss,
            grad_norm,
            converged=True,
            progressed=False,
        )

    initial_step = state.step or ls.initial_step
    direction, iters = _direction(state, grad, config)
    try:
        alpha, value = _line_minimize(
            objective, params, direction, loss, ls, initial_step
        )
    except NoBracketError:
        logger.debug("No bracket, retrying steepest descent")
        direction, iters = -grad, 1
        initial_step = (state.step or ls.initial_step) / 2.0
        try:
            alpha, value = _line_minimize(
                objective, params, direction, loss, ls, initial_step
            )
        except NoBracketError:
            stalled = CgState(
                loss=loss,
                grad=grad,
                zero_threshold=threshold,
                step=initial_step / 2.0**SHRINK_PROBES,
            )
            return CgStepResult(
                params,
                stalled,
                loss,
                grad_norm,
                no_bracket=True,
                progressed=False,
            )

    if not value < loss:
        rejected = CgState(
            loss=loss,
            grad=grad,
            zero_threshold=threshold,
            step=initial_step / 2.0,
        )
        return CgStepResult(
            params, rejected, loss, grad_norm, progressed=False
        )

    new_params = axpy(alpha, direction, params)
    new_loss, new_grad = objective.loss_grad(new_params)
    new_state = CgState(
        g_prev=grad,
        d=direction,
        iters_since_restart=iters,
        loss=new_loss,
        grad=new_grad,
        zero_threshold=threshold,
        step=alpha,
    )
    return CgStepResult(new_params, new_state, new_loss, norm(new_grad))


def step_flags(
    result: CgStepResult, failures: int
) -> frozenset[TraceFlag]:
    """Trace flags for the epoch of a conjugate gradient step.

    Parameters
    ----------
    result
        Outcome of the step.
    failures
        Consecutive steps, this one included, that found no bracket.
    """
    flags = set()
    if result.converged:
        flags.add(TraceFlag.converged)
    elif not result.progressed:
        flags.add(TraceFlag.no_progress)
    if failures >= STALL_EPOCHS:
        flags.add(TraceFlag.stall)
    return frozenset(flags)


def cg_minimize(
    params: Vector,
    objective: Objective,
    epochs: int,
    ls: LineSearchConfig,
    meter: CostMeter,
    config: CgConfig | None = None,
) -> TrainingTrace:
    """Run one conjugate gradient step per epoch.

    Parameters
    ----------
    params
        Starting parameters.
    objective
        Full-batch objective.  Evaluations are charged to ``meter``.
    epochs
        Maximum number of steps.
    ls
        Line-search settings.
    meter
        Cost meter normalized to the objective's example count.
    config
        Conjugate gradient settings.

    Returns
    -------
    TrainingTrace
        One row per epoch.  The run stops early, with the last row flagged
        ``converged``, once the gradient norm falls below the zero
        threshold.

    Raises
    ------
    NonFiniteLossError
        Raised if the loss becomes NaN or infinite.
    """
    if epochs < 1:
        raise ContractViolationError("epochs must be at least 1")
    metered = MeteredObjective(objective, meter)
    trace = TrainingTrace()
    state = CgState()
    failures = 0
    for epoch in range(1, epochs + 1):
        result = cg_step(state, params, metered, ls, config)
        loss, grad_norm = result.loss, result.grad_norm
        if not (math.isfinite(loss) and math.isfinite(grad_norm)):
            msg = f"Loss is {loss}, gradient norm {grad_norm}"
            raise NonFiniteLossError(msg, trace)
        params, state = result.params, result.state
        trace.params = params
        failures = failures + 1 if result.no_bracket else 0
        trace.append(
            TraceRow(
                epoch=epoch,
                loss=result.loss,
                grad_norm=result.grad_norm,
                phase=Phase.cg,
                cost_units=meter.cost_units,
                flags=step_flags(result, failures),
            )
        )
        if result.converged:
            logger.info("Conjugate gradient converged", epoch=epoch)
            break
    return trace
