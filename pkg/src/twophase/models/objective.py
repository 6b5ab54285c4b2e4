"""Objectives: anything yielding a loss and gradient at a parameter point."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable
from typing import Generic, TypeVar

import numpy as np
import numpy.typing as npt

from ..diagnostics.cost import CostKind, CostMeter
from ..exceptions import ContractViolationError
from ..numerics import Matrix, Vector, dot, freeze
from .dataset import Dataset
from .mlp import (
    Activation,
    MlpModel,
    mlp_loss,
    mlp_loss_grad,
    parameter_count,
)
from .toy import (
    ToyTanhTask,
    TwoLayerTask,
    toy_loss_grad,
    twolayer_loss_grad,
)

__all__ = [
    "MeteredObjective",
    "MlpObjective",
    "Objective",
    "QuadraticObjective",
    "RosenbrockObjective",
    "ToyObjective",
]

Indices = npt.NDArray[np.intp]
"""Type for example index arrays."""

TaskT = TypeVar("TaskT", ToyTanhTask, TwoLayerTask)


class Objective(ABC):
    """A differentiable loss over a fixed set of examples.

    Objectives without examples of their own (synthetic test functions, the
    one-dimensional toy tasks) report a single example, so a mini-batch is
    always the full batch.
    """

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Number of parameters."""

    @property
    def example_count(self) -> int:
        """Number of examples in the full batch."""
        return 1

    @abstractmethod
    def loss(self, params: Vector) -> float:
        """Full-batch loss, forward pass only."""

    @abstractmethod
    def loss_grad(self, params: Vector) -> tuple[float, Vector]:
        """Full-batch loss and gradient."""

    def batch_loss_grad(
        self, params: Vector, indices: Indices
    ) -> tuple[float, Vector]:
        """Loss and gradient averaged over the selected examples."""
        return self.loss_grad(params)

    def exact_step(self, params: Vector, direction: Vector) -> float | None:
        """Exact minimizing step length along a direction, if known."""
        return None


class ToyObjective(Objective, Generic[TaskT]):
    """One-dimensional objective over the parameter ``p`` of a toy task."""

    def __init__(
        self, fn: Callable[[float, TaskT], tuple[float, float]], task: TaskT
    ) -> None:
        self._fn = fn
        self.task = task

    @classmethod
    def for_task(
        cls, task: ToyTanhTask | TwoLayerTask
    ) -> ToyObjective[ToyTanhTask] | ToyObjective[TwoLayerTask]:
        """Pair a task with the loss function of its family."""
        if isinstance(task, ToyTanhTask):
            return ToyObjective(toy_loss_grad, task)
        return ToyObjective(twolayer_loss_grad, task)

    @property
    def dimension(self) -> int:
        return 1

    def loss(self, params: Vector) -> float:
        return self._fn(float(params[0]), self.task)[0]

    def loss_grad(self, params: Vector) -> tuple[float, Vector]:
        loss, grad = self._fn(float(params[0]), self.task)
        return loss, np.array([grad])


class MlpObjective(Objective):
    """Mean squared error of a network architecture over a dataset.

    Parameters
    ----------
    layer_dims
        Widths from input to output.
    activation
        Hidden-layer activation.
    dataset
        Training examples.
    threads
        Maximum number of evaluation threads.
    """

    def __init__(
        self,
        layer_dims: tuple[int, ...],
        activation: Activation,
        dataset: Dataset,
        threads: int = 1,
    ) -> None:
        self.layer_dims = layer_dims
        self.activation = activation
        self.dataset = dataset
        self.threads = threads

    @property
    def dimension(self) -> int:
        return parameter_count(self.layer_dims)

    @property
    def example_count(self) -> int:
        return self.dataset.example_count

    def model(self, params: Vector) -> MlpModel:
        """Network with a read-only copy of the parameters.

        Evaluation threads share the weights of the returned model.
        """
        weights = freeze(params.copy())
        return MlpModel(self.layer_dims, weights, self.activation)

    def loss(self, params: Vector) -> float:
        return mlp_loss(self.model(params), self.dataset, self.threads)

    def loss_grad(self, params: Vector) -> tuple[float, Vector]:
        return mlp_loss_grad(self.model(params), self.dataset, self.threads)

    def batch_loss_grad(
        self, params: Vector, indices: Indices
    ) -> tuple[float, Vector]:
        batch = self.dataset.subset(indices)
        return mlp_loss_grad(self.model(params), batch, self.threads)


class QuadraticObjective(Objective):
    """Convex quadratic ``½ xᵀAx − bᵀx`` with symmetric positive definite A."""

    def __init__(self, a: Matrix, b: Vector) -> None:
        self.a = a
        self.b = b

    @classmethod
    def random(
        cls, dimension: int, seed: int, condition: float = 10.0
    ) -> QuadraticObjective:
        """Draw a quadratic with eigenvalues spread over [1, condition]."""
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(dimension, dimension)))
        eigenvalues = np.linspace(1.0, condition, dimension)
        a = (q * eigenvalues) @ q.T
        return cls((a + a.T) / 2.0, rng.normal(size=dimension))

    @property
    def dimension(self) -> int:
        return int(self.b.shape[0])

    def loss(self, params: Vector) -> float:
        return 0.5 * dot(params, self.a @ params) - dot(self.b, params)

    def loss_grad(self, params: Vector) -> tuple[float, Vector]:
        ax = self.a @ params
        return 0.5 * dot(params, ax) - dot(self.b, params), ax - self.b

    def exact_step(self, params: Vector, direction: Vector) -> float | None:
        grad = self.a @ params - self.b
        return -dot(grad, direction) / dot(direction, self.a @ direction)


class RosenbrockObjective(Objective):
    """Two-dimensional Rosenbrock valley with its minimum 0 at (1, 1)."""

    @property
    def dimension(self) -> int:
        return 2

    def loss(self, params: Vector) -> float:
        x, y = float(params[0]), float(params[1])
        return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2

    def loss_grad(self, params: Vector) -> tuple[float, Vector]:
        x, y = float(params[0]), float(params[1])
        valley = y - x * x
        grad = np.array(
            [-2.0 * (1.0 - x) - 400.0 * x * valley, 200.0 * valley]
        )
        return (1.0 - x) ** 2 + 100.0 * valley**2, grad


class MeteredObjective(Objective):
    """Objective that charges every evaluation to a cost meter."""

    def __init__(self, inner: Objective, meter: CostMeter) -> None:
        if meter.example_count != inner.example_count:
            msg = (
                f"Meter normalizes by {meter.example_count} examples but the"
                f" objective has {inner.example_count}"
            )
            raise ContractViolationError(msg)
        self.inner = inner
        self.meter = meter

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    @property
    def example_count(self) -> int:
        return self.inner.example_count

    def loss(self, params: Vector) -> float:
        self.meter.charge(CostKind.forward, self.inner.example_count)
        return self.inner.loss(params)

    def loss_grad(self, params: Vector) -> tuple[float, Vector]:
        self.meter.charge(CostKind.gradient, self.inner.example_count)
        return self.inner.loss_grad(params)

    def batch_loss_grad(
        self, params: Vector, indices: Indices
    ) -> tuple[float, Vector]:
        self.meter.charge(CostKind.gradient, len(indices))
        return self.inner.batch_loss_grad(params, indices)

    def exact_step(self, params: Vector, direction: Vector) -> float | None:
        step = self.inner.exact_step(params, direction)
        if step is not None:
            self.meter.charge(CostKind.forward, self.inner.example_count)
        return step
