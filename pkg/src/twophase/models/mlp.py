"""Multilayer perceptron with a mean-squared-error loss.

Weights live in one flat vector, layer by layer: each layer's fan-in by
fan-out weight matrix in row-major order followed by its bias.  Hidden layers
apply the configured activation and the output layer is linear.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from functools import partial
from typing import TypeVar

import numpy as np

from ..constants import EVALUATION_CHUNK
from ..exceptions import ContractViolationError
from ..numerics import Matrix, Vector
from .dataset import Dataset

__all__ = [
    "Activation",
    "MlpModel",
    "init_mlp",
    "mlp_forward",
    "mlp_loss",
    "mlp_loss_grad",
    "parameter_count",
]

_T = TypeVar("_T")
_R = TypeVar("_R")


class Activation(StrEnum):
    """Hidden-layer activation function."""

    tanh = "tanh"
    relu = "relu"


def parameter_count(dims: Sequence[int]) -> int:
    """Number of trainable parameters of a network with these widths."""
    return sum(a * b + b for a, b in zip(dims[:-1], dims[1:], strict=True))


@dataclass(frozen=True)
class MlpModel:
    """Layer widths, flat weights and hidden activation of a network."""

    layer_dims: tuple[int, ...]
    """Widths from input to output."""

    weights: Vector
    """Flattened weights in layer-major order."""

    hidden_activation: Activation = Activation.tanh

    def __post_init__(self) -> None:
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            msg = f"Invalid layer widths {self.layer_dims}"
            raise ContractViolationError(msg)
        expected = parameter_count(self.layer_dims)
        if self.weights.shape != (expected,):
            msg = (
                f"Layer widths {self.layer_dims} need {expected} weights,"
                f" got {self.weights.shape[0]}"
            )
            raise ContractViolationError(msg)

    @property
    def parameter_count(self) -> int:
        """Number of trainable parameters, P."""
        return int(self.weights.shape[0])

    def with_weights(self, weights: Vector) -> MlpModel:
        """Return the same architecture with different weights."""
        return MlpModel(self.layer_dims, weights, self.hidden_activation)

    def layers(self) -> list[tuple[Matrix, Vector]]:
        """Views of the weight matrix and bias of every layer."""
        layers = []
        offset = 0
        for fan_in, fan_out in zip(
            self.layer_dims[:-1], self.layer_dims[1:], strict=True
        ):
            size = fan_in * fan_out
            w = self.weights[offset : offset + size].reshape(fan_in, fan_out)
            offset += size
            b = self.weights[offset : offset + fan_out]
            offset += fan_out
            layers.append((w, b))
        return layers


def init_mlp(
    dims: Sequence[int],
    activation: Activation = Activation.tanh,
    seed: int = 0,
) -> MlpModel:
    """Create a network with seeded fan-in scaled uniform weights.

    Every weight and bias of a layer is drawn uniformly from
    ``(-1/sqrt(fan_in), 1/sqrt(fan_in))``.
    """
    rng = np.random.default_rng(seed)
    parts = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:], strict=True):
        bound = 1.0 / math.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        parts.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(tuple(dims), np.concatenate(parts), activation)


def _activate(z: Matrix, activation: Activation) -> Matrix:
    if activation == Activation.relu:
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _slope(z: Matrix, a: Matrix, activation: Activation) -> Matrix:
    if activation == Activation.relu:
        return (z > 0.0).astype(np.float64)
    return 1.0 - a * a


def _check_inputs(model: MlpModel, inputs: Matrix) -> None:
    if inputs.ndim != 2 or inputs.shape[1] != model.layer_dims[0]:
        msg = (
            f"Inputs of shape {inputs.shape} do not match input width"
            f" {model.layer_dims[0]}"
        )
        raise ContractViolationError(msg)


def mlp_forward(model: MlpModel, inputs: Matrix) -> Matrix:
    """Predictions for a K×D input matrix, returned as K×M.

    Raises
    ------
    ContractViolationError
        Raised if the input width does not match the model.
    """
    _check_inputs(model, inputs)
    layers = model.layers()
    a = inputs
    for k, (w, b) in enumerate(layers):
        z = a @ w + b
        if k < len(layers) - 1:
            z = _activate(z, model.hidden_activation)
        a = z
    return a


def _chunk_sse(model: MlpModel, chunk: tuple[Matrix, Matrix]) -> float:
    inputs, targets = chunk
    diff = mlp_forward(model, inputs) - targets
    return float(np.sum(diff * diff))


def _chunk_sse_grad(
    model: MlpModel, chunk: tuple[Matrix, Matrix]
) -> tuple[float, Vector]:
    inputs, targets = chunk
    layers = model.layers()
    last = len(layers) - 1
    activations = [inputs]
    preactivations = []
    a = inputs
    for k, (w, b) in enumerate(layers):
        z = a @ w + b
        a = z if k == last else _activate(z, model.hidden_activation)
        preactivations.append(z)
        activations.append(a)
    diff = a - targets
    sse = float(np.sum(diff * diff))

    # Backpropagate the unnormalized gradient of the summed squared error.
    parts: list[Vector] = []
    delta = 2.0 * diff
    for k in range(last, -1, -1):
        w, _ = layers[k]
        parts.append(np.sum(delta, axis=0))
        parts.append((activations[k].T @ delta).ravel())
        if k > 0:
            slope = _slope(
                preactivations[k - 1], activations[k], model.hidden_activation
            )
            delta = (delta @ w.T) * slope
    parts.reverse()
    return sse, np.concatenate(parts)


def _chunks(batch: Dataset) -> list[tuple[Matrix, Matrix]]:
    return [
        (
            batch.inputs[start : start + EVALUATION_CHUNK],
            batch.targets[start : start + EVALUATION_CHUNK],
        )
        for start in range(0, batch.example_count, EVALUATION_CHUNK)
    ]


def _map_ordered(
    fn: Callable[[_T], _R], items: list[_T], threads: int
) -> list[_R]:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _check_batch(model: MlpModel, batch: Dataset) -> None:
    if batch.example_count == 0:
        raise ContractViolationError("Cannot evaluate an empty batch")
    _check_inputs(model, batch.inputs)
    if batch.output_width != model.layer_dims[-1]:
        msg = (
            f"Targets of width {batch.output_width} do not match output"
            f" width {model.layer_dims[-1]}"
        )
        raise ContractViolationError(msg)


def mlp_loss(model: MlpModel, batch: Dataset, threads: int = 1) -> float:
    """Mean squared error over all examples and output components.

    Shares its forward computation with `mlp_loss_grad`, so both return
    bit-identical losses for the same weights.
    """
    _check_batch(model, batch)
    sse = _map_ordered(partial(_chunk_sse, model), _chunks(batch), threads)
    return sum(sse) / (batch.example_count * batch.output_width)


def mlp_loss_grad(
    model: MlpModel, batch: Dataset, threads: int = 1
) -> tuple[float, Vector]:
    """Mean squared error and its gradient with respect to the weights.

    The batch is cut into fixed-size chunks that may be evaluated on up to
    ``threads`` threads; partial sums are combined in chunk order so the
    result does not depend on the thread count.

    Parameters
    ----------
    model
        Network to evaluate.
    batch
        Examples to average over.
    threads
        Maximum number of worker threads.

    Returns
    -------
    tuple of float and Vector
        Loss and gradient, the gradient laid out like ``model.weights``.

    Raises
    ------
    ContractViolationError
        Raised if the batch is empty or its shape does not match the model.
    """
    _check_batch(model, batch)
    results = _map_ordered(
        partial(_chunk_sse_grad, model), _chunks(batch), threads
    )
    sse = 0.0
    grad = np.zeros(model.parameter_count)
    for chunk_sse, chunk_grad in results:
        sse += chunk_sse
        grad += chunk_grad
    scale = batch.example_count * batch.output_width
    return sse / scale, grad / scale
