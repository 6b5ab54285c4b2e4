"""Exceptions for twophase.

Every exception that can escape to the command line carries the exit code
the process terminates with, so the mapping from failure to exit status is
defined in one place.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .diagnostics.trace import TrainingTrace

__all__ = [
    "BadMagicError",
    "ContractViolationError",
    "CountMismatchError",
    "GradientCheckError",
    "IngestError",
    "InvalidLabelError",
    "NoBracketError",
    "NonFiniteLossError",
    "NumericalError",
    "ProbeError",
    "TruncatedFileError",
    "TwoPhaseError",
    "UsageError",
]


class TwoPhaseError(Exception):
    """Base class for twophase errors."""

    exit_code = 1
    """Process exit status when this error reaches the command line."""


class UsageError(TwoPhaseError):
    """The command was invoked with invalid settings."""

    exit_code = 2


class ContractViolationError(TwoPhaseError, ValueError):
    """An operation was called with arguments outside its contract."""

    exit_code = 2


class IngestError(TwoPhaseError):
    """A dataset file could not be read."""

    exit_code = 3


class BadMagicError(IngestError):
    """An IDX file does not start with the expected magic number."""


class TruncatedFileError(IngestError):
    """An IDX file ends before the data its header announces."""


class CountMismatchError(IngestError):
    """Image and label files disagree on the number of examples."""


class InvalidLabelError(IngestError):
    """A label is outside the range of the one-hot encoding."""


class NumericalError(TwoPhaseError):
    """A computation produced a non-finite value."""

    exit_code = 4


class NonFiniteLossError(NumericalError):
    """Training produced a NaN or infinite loss.

    Parameters
    ----------
    message
        Human-readable description.
    trace
        Rows recorded before the failure, so they can still be written.
    """

    def __init__(
        self, message: str, trace: TrainingTrace | None = None
    ) -> None:
        super().__init__(message)
        self.trace = trace


class ProbeError(NumericalError):
    """The objective was not finite at a curvature probe point."""


class GradientCheckError(TwoPhaseError):
    """An analytic gradient disagrees with its finite-difference estimate."""

    exit_code = 5


class NoBracketError(TwoPhaseError):
    """Line-search bracketing found no interior minimum."""
