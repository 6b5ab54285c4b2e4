"""Hardware-independent cost accounting."""

from __future__ import annotations

import threading
from enum import StrEnum

from ..exceptions import ContractViolationError

__all__ = ["CostKind", "CostMeter"]


class CostKind(StrEnum):
    """Kind of objective evaluation being charged."""

    forward = "forward"
    gradient = "gradient"


class CostMeter:
    """Count forward and gradient evaluations in forward-pass equivalents.

    Both counters hold numbers of examples processed.  A gradient evaluation
    includes its forward pass and is charged twice as much, so one
    full-batch forward costs one unit and one full-batch gradient costs two.
    Charges are serialized by a lock so that objectives evaluating chunks in
    parallel may charge concurrently.

    Parameters
    ----------
    example_count
        Number of examples in the full batch, used to normalize units.
    """

    def __init__(self, example_count: int = 1) -> None:
        if example_count < 1:
            raise ContractViolationError("example_count must be positive")
        self.example_count = example_count
        self.forward_evals = 0
        self.gradient_evals = 0
        self._lock = threading.Lock()

    def charge(self, kind: CostKind, examples: int | None = None) -> None:
        """Record one evaluation.

        Parameters
        ----------
        kind
            Whether the evaluation computed a gradient.
        examples
            Number of examples processed, defaulting to the full batch.
        """
        count = self.example_count if examples is None else examples
        with self._lock:
            if kind == CostKind.gradient:
                self.gradient_evals += count
            else:
                self.forward_evals += count

    @property
    def cost_units(self) -> float:
        """Cumulative cost in full-batch forward-pass equivalents."""
        with self._lock:
            work = self.forward_evals + 2 * self.gradient_evals
        return work / self.example_count
