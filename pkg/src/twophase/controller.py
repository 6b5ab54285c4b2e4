"""Two-phase training: Adam until the gradient-norm peak, then CG.

While Adam runs, the full-batch gradient norm is measured once per epoch and
fed to a `SwapDetector`.  The norm first grows while the optimizer crosses
the non-convex part of the landscape and shrinks once it has entered the
convex basin around a minimum.  When the smoothed norm falls below
``gnfact`` times its running maximum, training switches permanently to
nonlinear conjugate gradient on the full batch.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from enum import StrEnum
from typing import Annotated, Self

import numpy as np
import structlog
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

from .constants import (
    DEFAULT_ADAM_FRACTION,
    DEFAULT_GNFACT,
    DEFAULT_SMOOTHING_WINDOW,
    STALL_EPOCHS,
)
from .diagnostics.cost import CostMeter
from .diagnostics.trace import Phase, TraceFlag, TraceRow, TrainingTrace
from .exceptions import (
    ContractViolationError,
    NonFiniteLossError,
    UsageError,
)
from .models.objective import MeteredObjective, Objective
from .numerics import Vector, norm
from .optim.adam import AdamConfig, AdamState, adam_step
from .optim.cg import CgConfig, CgState, cg_step, step_flags
from .optim.linesearch import LineSearchConfig

__all__ = [
    "EpochObserver",
    "Mode",
    "SwapDetector",
    "SwapMode",
    "TwoPhaseConfig",
    "run_baseline",
    "run_two_phase",
    "smooth",
]

logger = structlog.get_logger(__name__)

EpochObserver = Callable[[TraceRow, Vector], None]
"""Callback receiving every trace row with the parameters after that epoch."""


class Mode(StrEnum):
    """Training schedule."""

    two_phase = "two-phase"
    adam_only = "adam-only"
    cg_only = "cg-only"


class SwapMode(StrEnum):
    """How a two-phase run decides when to hand over to CG."""

    detect = "detect"
    """Swap once the smoothed gradient norm has passed its peak."""

    fixed = "fixed"
    """Swap after a fixed share of the epoch budget."""


def smooth(history: Sequence[float], window: int) -> float:
    """Trailing mean of the last ``window`` values of a series.

    Shorter histories are averaged over all their values.

    Raises
    ------
    ContractViolationError
        Raised if the history is empty or the window is not positive.
    """
    if not history:
        raise ContractViolationError("Cannot smooth an empty history")
    if window < 1:
        raise ContractViolationError(f"Invalid window {window}")
    tail = history[-window:]
    return math.fsum(tail) / len(tail)


class SwapDetector:
    """Decide the Adam to CG handover from the gradient-norm history.

    Each observation is smoothed over the trailing window and compared with
    the running maximum of the smoothed values.  Adam stays active while the
    smoothed norm exceeds ``gnfact`` times that maximum.  Once Adam has been
    deactivated it stays deactivated.

    Parameters
    ----------
    gnfact
        Fraction of the peak below which the swap fires.
    window
        Smoothing window in observations.
    """

    def __init__(
        self,
        gnfact: float = DEFAULT_GNFACT,
        window: int = DEFAULT_SMOOTHING_WINDOW,
    ) -> None:
        if not 0.0 < gnfact < 1.0:
            raise ContractViolationError(f"gnfact {gnfact} not in (0, 1)")
        if window < 1:
            raise ContractViolationError(f"Invalid window {window}")
        self.gnfact = gnfact
        self.window = window
        self.gnmax = 0.0
        self.adam_active = True
        self.history: list[float] = []

    @property
    def phase(self) -> Phase:
        """Optimizer to use for the next epoch."""
        return Phase.adam if self.adam_active else Phase.cg

    def observe(self, gn_raw: float) -> Phase:
        """Record a gradient norm and return the phase for the next epoch.

        Raises
        ------
        ContractViolationError
            Raised if the gradient norm is negative or not finite.
        """
        if not (math.isfinite(gn_raw) and gn_raw >= 0.0):
            msg = f"Gradient norm must be finite and nonnegative: {gn_raw}"
            raise ContractViolationError(msg)
        self.history.append(gn_raw)
        gn = smooth(self.history, self.window)
        self.gnmax = max(gn, self.gnmax)
        if self.adam_active:
            self.adam_active = gn > self.gnmax * self.gnfact
        return self.phase

    def force(self) -> None:
        """Deactivate Adam without a detected peak."""
        self.adam_active = False


class TwoPhaseConfig(BaseModel):
    """Settings of a training run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    total_epochs: Annotated[
        int, Field(title="Number of epochs, both phases together", ge=2)
    ] = 60

    gnfact: Annotated[
        float,
        Field(
            title="Swap factor",
            description="Swap once the smoothed gradient norm drops to this"
            " fraction of its running maximum",
            gt=0,
            lt=1,
        ),
    ] = DEFAULT_GNFACT

    smoothing_window: Annotated[
        PositiveInt,
        Field(title="Gradient-norm smoothing window in epochs"),
    ] = DEFAULT_SMOOTHING_WINDOW

    max_adam_epochs: Annotated[
        PositiveInt | None,
        Field(
            title="Cap on Adam epochs",
            description="Swap is forced after this many Adam epochs,"
            " defaulting to one less than the total",
        ),
    ] = None

    swap_mode: Annotated[
        SwapMode, Field(title="Swap decision rule")
    ] = SwapMode.detect

    adam_fraction: Annotated[
        float,
        Field(
            title="Adam share of the epochs in fixed swap mode",
            gt=0,
            lt=1,
        ),
    ] = DEFAULT_ADAM_FRACTION

    cost_budget: Annotated[
        PositiveFloat | None,
        Field(
            title="Cost budget",
            description="An epoch that would end past this many cost units"
            " is discarded and training stops",
        ),
    ] = None

    adam: AdamConfig = AdamConfig()

    ls: LineSearchConfig = LineSearchConfig()

    cg: CgConfig = CgConfig()

    seed: Annotated[int, Field(title="Seed of the batch shuffling")] = 0

    @model_validator(mode="after")
    def _check_adam_cap(self) -> Self:
        if (
            self.max_adam_epochs is not None
            and self.max_adam_epochs >= self.total_epochs
        ):
            msg = "max_adam_epochs must be less than total_epochs"
            raise ValueError(msg)
        return self

    @property
    def adam_cap(self) -> int:
        """Adam epochs after which the swap to CG is forced."""
        if self.swap_mode == SwapMode.fixed:
            adam_epochs = round(self.adam_fraction * self.total_epochs)
            return min(max(adam_epochs, 1), self.total_epochs - 1)
        if self.max_adam_epochs is None:
            return self.total_epochs - 1
        return self.max_adam_epochs


class _Run:
    """Mutable state of one training run."""

    def __init__(
        self,
        objective: Objective,
        initial: Vector,
        config: TwoPhaseConfig,
        meter: CostMeter,
        observer: EpochObserver | None = None,
    ) -> None:
        if initial.shape != (objective.dimension,):
            msg = (
                f"Initial parameters of shape {initial.shape} do not match"
                f" dimension {objective.dimension}"
            )
            raise ContractViolationError(msg)
        self.objective = MeteredObjective(objective, meter)
        self.config = config
        self.meter = meter
        self.params = initial.copy()
        self.rng = np.random.default_rng(config.seed)
        self.adam = AdamState.zeros(objective.dimension)
        self.cg = CgState()
        self.cg_failures = 0
        self.detector = SwapDetector(config.gnfact, config.smoothing_window)
        self.trace = TrainingTrace(seed=config.seed, params=self.params)
        self.observer = observer
        self.spent = False

    def out_of_budget(self) -> bool:
        budget = self.config.cost_budget
        return self.spent or (
            budget is not None and self.meter.cost_units >= budget
        )

    def _commit(self, row: TraceRow, params: Vector) -> bool:
        """Record an epoch unless its cost crosses the budget.

        An epoch that would end past the budget is discarded: the
        parameters stay where the previous epoch left them.
        """
        budget = self.config.cost_budget
        if budget is not None and row.cost_units > budget:
            logger.info(
                "Cost budget spent",
                epoch=row.epoch - 1,
                budget=budget,
                discarded_cost=row.cost_units,
            )
            self.spent = True
            return False
        self.params = params
        self.trace.params = params
        self.trace.append(row)
        if self.observer:
            self.observer(row, params)
        return True

    def _check_finite(self, loss: float, grad_norm: float) -> None:
        if not math.isfinite(loss):
            msg = f"Loss is {loss} after {len(self.trace)} epochs"
            raise NonFiniteLossError(msg, self.trace)
        if not math.isfinite(grad_norm):
            msg = (
                f"Gradient norm is {grad_norm} after {len(self.trace)}"
                " epochs"
            )
            raise NonFiniteLossError(msg, self.trace)

    def adam_epoch(self, epoch: int) -> Phase:
        """Run one shuffled pass of mini-batch Adam steps.

        Returns the phase the swap detector proposes for the next epoch.
        """
        count = self.objective.example_count
        order = self.rng.permutation(count)
        batch_size = self.config.adam.batch_size
        params, adam = self.params, self.adam
        for start in range(0, count, batch_size):
            indices = order[start : start + batch_size]
            _, grad = self.objective.batch_loss_grad(params, indices)
            params, adam = adam_step(adam, self.config.adam, params, grad)
        loss, grad = self.objective.loss_grad(params)
        grad_norm = norm(grad)
        self._check_finite(loss, grad_norm)
        phase = self.detector.observe(grad_norm)
        row = TraceRow(
            epoch=epoch,
            loss=loss,
            grad_norm=grad_norm,
            phase=Phase.adam,
            cost_units=self.meter.cost_units,
            gnmax=self.detector.gnmax,
        )
        if self._commit(row, params):
            self.adam = adam
            self.cg = CgState.at(loss, grad)
        return phase

    def cg_epoch(self, epoch: int, forced: bool = False) -> bool:
        """Take one CG step, returning true once converged."""
        config = self.config
        result = cg_step(
            self.cg, self.params, self.objective, config.ls, config.cg
        )
        self._check_finite(result.loss, result.grad_norm)
        failures = self.cg_failures + 1 if result.no_bracket else 0
        flags = step_flags(result, failures)
        if forced:
            flags |= {TraceFlag.forced_swap}
        row = TraceRow(
            epoch=epoch,
            loss=result.loss,
            grad_norm=result.grad_norm,
            phase=Phase.cg,
            cost_units=self.meter.cost_units,
            gnmax=self.detector.gnmax,
            flags=flags,
        )
        if not self._commit(row, result.params):
            return False
        self.cg, self.cg_failures = result.state, failures
        if TraceFlag.stall in flags and failures == STALL_EPOCHS:
            logger.warning("Conjugate gradient stalled", epoch=epoch)
        return result.converged


def _train(
    mode: Mode,
    objective: Objective,
    initial: Vector,
    config: TwoPhaseConfig,
    meter: CostMeter,
    observer: EpochObserver | None,
) -> TrainingTrace:
    run = _Run(objective, initial, config, meter, observer)
    detect = config.swap_mode == SwapMode.detect
    adam_active = mode != Mode.cg_only
    adam_epochs = 0
    for epoch in range(1, config.total_epochs + 1):
        if run.out_of_budget():
            if not run.spent:
                logger.info("Cost budget spent", epoch=epoch - 1)
            break
        forced = False
        if (
            mode == Mode.two_phase
            and adam_active
            and adam_epochs >= config.adam_cap
        ):
            adam_active = False
            run.detector.force()
            forced = detect
            if forced:
                logger.warning(
                    "Forced swap to conjugate gradient", epoch=epoch
                )
            else:
                logger.info("Swapped to conjugate gradient", epoch=epoch)
        if adam_active:
            phase = run.adam_epoch(epoch)
            if run.spent:
                break
            adam_epochs += 1
            if mode == Mode.two_phase and detect and phase == Phase.cg:
                adam_active = False
                logger.info(
                    "Swapped to conjugate gradient",
                    epoch=epoch + 1,
                    gnmax=run.detector.gnmax,
                )
        elif run.cg_epoch(epoch, forced):
            logger.info("Conjugate gradient converged", epoch=epoch)
            break
    if not run.trace.rows:
        msg = f"Cost budget {config.cost_budget} does not cover one epoch"
        raise UsageError(msg)
    return run.trace


def run_two_phase(
    objective: Objective,
    initial: Vector,
    config: TwoPhaseConfig,
    meter: CostMeter,
    observer: EpochObserver | None = None,
) -> TrainingTrace:
    """Train with Adam, then conjugate gradient after the swap point.

    Every Adam epoch is one pass of shuffled mini-batch steps, the last batch
    possibly partial, followed by one full-batch loss and gradient
    evaluation whose norm feeds the swap detector.  Every CG epoch is one
    `~twophase.optim.cg.cg_step` on the full batch; the first one reuses the
    gradient computed at the end of the last Adam epoch.

    Parameters
    ----------
    objective
        Objective to minimize.  Evaluations are charged to ``meter``.
    initial
        Starting parameters.  Not modified.
    config
        Run settings.
    meter
        Cost meter normalized to the objective's example count.
    observer
        Called after every epoch.  Evaluations it makes are not charged.

    Returns
    -------
    TrainingTrace
        One row per epoch with the swap epoch and final parameters set.

    Raises
    ------
    NonFiniteLossError
        Raised if the loss or the gradient norm becomes NaN or infinite.
        The exception carries the rows recorded so far.
    UsageError
        Raised if the cost budget does not cover the first epoch.
    """
    return _train(Mode.two_phase, objective, initial, config, meter, observer)


def run_baseline(
    mode: Mode,
    objective: Objective,
    initial: Vector,
    config: TwoPhaseConfig,
    meter: CostMeter,
    observer: EpochObserver | None = None,
) -> TrainingTrace:
    """Train with a single optimizer for the whole epoch budget.

    Adam-only epochs and CG-only epochs are accounted exactly as the
    corresponding phases of `run_two_phase`, so the three traces share one
    schema and one cost scale.  Passing `Mode.two_phase` delegates to
    `run_two_phase`.
    """
    return _train(mode, objective, initial, config, meter, observer)
