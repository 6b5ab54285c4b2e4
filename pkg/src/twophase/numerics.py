"""Dense vector kernels shared by all optimizers.

All arithmetic is 64-bit.  Reductions go through `numpy.sum`, whose pairwise
summation visits elements in a fixed order, so repeated runs on the same
input produce bit-identical results.
"""

from __future__ import annotations

import math

import numpy as np
import numpy.typing as npt

from .exceptions import ContractViolationError

Vector = npt.NDArray[np.float64]
"""Type for dense parameter, gradient and direction vectors."""

Matrix = npt.NDArray[np.float64]
"""Type for dense row-major matrices (examples by features)."""

__all__ = [
    "Matrix",
    "Vector",
    "as_vector",
    "axpy",
    "dot",
    "freeze",
    "norm",
]


def as_vector(values: npt.ArrayLike) -> Vector:
    """Build a vector from arbitrary numeric input.

    Raises
    ------
    ContractViolationError
        Raised if the input is not one-dimensional or not finite.
    """
    vector = np.array(values, dtype=np.float64)
    if vector.ndim != 1:
        msg = f"Vector must be one-dimensional, got shape {vector.shape}"
        raise ContractViolationError(msg)
    if not np.all(np.isfinite(vector)):
        raise ContractViolationError("Vector entries must be finite")
    return vector


def freeze(vector: Vector) -> Vector:
    """Mark a vector read-only so it can be shared between threads."""
    vector.flags.writeable = False
    return vector


def _check_lengths(a: Vector, b: Vector) -> None:
    if a.shape != b.shape:
        msg = f"Dimension mismatch: {a.shape[0]} != {b.shape[0]}"
        raise ContractViolationError(msg)


def dot(a: Vector, b: Vector) -> float:
    """Inner product of two vectors of equal length."""
    _check_lengths(a, b)
    return float(np.sum(a * b))


def norm(a: Vector) -> float:
    """Euclidean norm."""
    return math.sqrt(dot(a, a))


def axpy(alpha: float, x: Vector, y: Vector) -> Vector:
    """Return ``y + alpha * x`` as a new vector."""
    _check_lengths(x, y)
    return y + alpha * x
