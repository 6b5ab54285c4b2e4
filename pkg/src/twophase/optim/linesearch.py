"""Derivative-free line search: minimum bracketing and golden section."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Annotated

import structlog
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from ..constants import GOLDEN_RATIO_LONG, GOLDEN_RATIO_SHORT, SHRINK_PROBES
from ..exceptions import ContractViolationError, NoBracketError

__all__ = [
    "Bracket",
    "LineSearchConfig",
    "LineSearchResult",
    "bracket_minimum",
    "golden_section",
]

_ABSOLUTE_FLOOR = 1e-10
"""Added to the interval scale so a minimizer at zero still terminates."""

logger = structlog.get_logger(__name__)


class LineSearchConfig(BaseModel):
    """Settings for bracketing and golden-section search."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    initial_step: Annotated[
        float, Field(title="First trial step length", gt=0)
    ] = 1.0

    growth: Annotated[
        float, Field(title="Expansion factor while bracketing", gt=1)
    ] = 2.0

    tol: Annotated[
        float,
        Field(
            title="Relative tolerance",
            description="Golden section stops once the interval is this"
            " small relative to the step length",
            gt=0,
        ),
    ] = 1e-4

    max_evals: Annotated[
        PositiveInt,
        Field(title="Evaluation budget of each bracketing or search pass"),
    ] = 100

    exact: Annotated[
        bool,
        Field(
            title="Use exact line minimization",
            description="Take the closed-form step of objectives that"
            " provide one (quadratics) instead of golden section",
        ),
    ] = False


@dataclass(frozen=True)
class Bracket:
    """Three step lengths ``a < b < c`` with ``phi(b)`` below both ends."""

    a: float
    b: float
    c: float
    fa: float
    fb: float
    fc: float
    evaluations: int


@dataclass(frozen=True)
class LineSearchResult:
    """Outcome of a golden-section search."""

    alpha: float
    """Best step length found."""

    value: float
    """Objective value at ``alpha``."""

    evaluations: int
    """Number of objective evaluations spent."""

    converged: bool
    """False if the evaluation budget ran out before the tolerance."""

    widths: tuple[float, ...]
    """Interval width before the first and after every iteration."""


def _safe(phi: Callable[[float], float]) -> Callable[[float], float]:
    def evaluate(alpha: float) -> float:
        value = phi(alpha)
        return value if math.isfinite(value) else math.inf

    return evaluate


def bracket_minimum(
    phi: Callable[[float], float],
    config: LineSearchConfig,
    phi0: float | None = None,
) -> Bracket:
    """Bracket a minimum of ``phi`` on the positive half-line.

    Steps grow geometrically from ``config.initial_step`` while ``phi`` keeps
    decreasing.  If the first step already fails to decrease ``phi``, halved
    steps are probed instead.  Non-finite values count as infinitely large.

    Parameters
    ----------
    phi
        One-dimensional objective, usually the loss along a direction.
    config
        Line-search settings.
    phi0
        Known value of ``phi(0)``, saving one evaluation.

    Returns
    -------
    Bracket
        Bracketing triple with its function values.

    Raises
    ------
    NoBracketError
        Raised if no step decreases ``phi`` below ``phi(0)`` or the
        evaluation budget runs out while ``phi`` is still decreasing.
    """
    f = _safe(phi)
    evals = 0
    if phi0 is None:
        phi0 = f(0.0)
        evals += 1
    step = config.initial_step
    fs = f(step)
    evals += 1

    if fs >= phi0:
        hi, fhi = step, fs
        for _ in range(SHRINK_PROBES):
            t = hi / 2.0
            ft = f(t)
            evals += 1
            if ft < phi0:
                return Bracket(0.0, t, hi, phi0, ft, fhi, evals)
            hi, fhi = t, ft
        raise NoBracketError(f"No descent within {SHRINK_PROBES} halvings")

    a, fa, b, fb = 0.0, phi0, step, fs
    c = b + config.growth * (b - a)
    fc = f(c)
    evals += 1
    while fc < fb:
        if evals >= config.max_evals:
            msg = f"Still descending after {evals} evaluations"
            raise NoBracketError(msg)
        a, fa, b, fb = b, fb, c, fc
        c = b + config.growth * (b - a)
        fc = f(c)
        evals += 1

    # A plateau between b and c hides the minimum; split it once.
    if fc == fb:
        m = (b + c) / 2.0
        fm = f(m)
        evals += 1
        if fm < fb:
            return Bracket(b, m, c, fb, fm, fc, evals)
        if fm > fb:
            return Bracket(a, b, m, fa, fb, fm, evals)
    return Bracket(a, b, c, fa, fb, fc, evals)


def golden_section(
    phi: Callable[[float], float],
    a: float,
    b: float,
    c: float,
    config: LineSearchConfig,
) -> LineSearchResult:
    """Locate the minimum inside a bracket by golden-section search.

    The two interior points sit at the 0.381966 and 0.618034 fractions of the
    interval, so every iteration keeps one of them and shrinks the interval
    by the golden ratio.

    Parameters
    ----------
    phi
        One-dimensional objective.
    a, b, c
        Bracketing triple with ``a < b < c``.
    config
        Line-search settings; ``tol`` and ``max_evals`` are used.

    Returns
    -------
    LineSearchResult
        Best point found.  ``converged`` is false if the evaluation budget
        ran out first.
    """
    if not a < b < c:
        msg = f"Invalid bracket ({a}, {b}, {c})"
        raise ContractViolationError(msg)
    f = _safe(phi)
    lo, hi = a, c
    x1 = lo + GOLDEN_RATIO_SHORT * (hi - lo)
    x2 = lo + GOLDEN_RATIO_LONG * (hi - lo)
    f1, f2 = f(x1), f(x2)
    evals = 2
    widths = [hi - lo]
    converged = True
    while hi - lo > config.tol * (abs(x1) + abs(x2) + _ABSOLUTE_FLOOR):
        if evals >= config.max_evals:
            converged = False
            logger.warning(
                "Golden-section search exhausted its budget",
                evaluations=evals,
                width=hi - lo,
            )
            break
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = lo + GOLDEN_RATIO_SHORT * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN_RATIO_LONG * (hi - lo)
            f2 = f(x2)
        evals += 1
        widths.append(hi - lo)

    alpha, value = (x1, f1) if f1 < f2 else (x2, f2)
    return LineSearchResult(alpha, value, evals, converged, tuple(widths))
