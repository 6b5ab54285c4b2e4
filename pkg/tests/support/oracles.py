"""Independent reference computations used as test oracles.

These are straight-line transcriptions of the formulas, deliberately not
sharing code with the package.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence

import numpy as np

__all__ = [
    "adam_reference",
    "central_difference",
    "forward_reference",
    "toy_second_derivative",
    "twolayer_loss_reference",
]


def central_difference(
    fn: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient with a fixed absolute step."""
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (fn(x + e) - fn(x - e)) / (2.0 * step)
    return grad


def forward_reference(
    dims: Sequence[int], weights: np.ndarray, x: Sequence[float]
) -> list[float]:
    """Evaluate a tanh network on one input with explicit loops."""
    a = list(x)
    offset = 0
    for k in range(len(dims) - 1):
        fan_in, fan_out = dims[k], dims[k + 1]
        w = weights[offset : offset + fan_in * fan_out]
        offset += fan_in * fan_out
        b = weights[offset : offset + fan_out]
        offset += fan_out
        z = []
        for j in range(fan_out):
            total = float(b[j])
            for i in range(fan_in):
                total += a[i] * float(w[i * fan_out + j])
            z.append(total)
        a = z if k == len(dims) - 2 else [math.tanh(v) for v in z]
    return a


def adam_reference(
    params: float,
    grads: Sequence[float],
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> float:
    """Apply scalar Adam updates for a sequence of gradients."""
    m = 0.0
    v = 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        params = params - lr * m_hat / (math.sqrt(v_hat) + eps)
    return params


def toy_second_derivative(p: float, x: float, r: float, units: int) -> float:
    """Symbolic second derivative of the single-layer toy loss."""
    t = math.tanh(p * x)
    s = 1.0 - t * t
    residual = units * t - r
    return 2.0 * (units * x * s) ** 2 - 4.0 * residual * units * x * x * t * s


def twolayer_loss_reference(p: float, x: float, r: float) -> float:
    """Loss of the two-layer toy model without its second branch."""
    return (math.tanh(math.tanh(p * x)) - r) ** 2
