"""The ``gradcheck`` command: finite-difference audit of analytic gradients.

Every model family is evaluated at random configurations and its analytic
gradient compared component by component with a central difference.  The
relative error of a component is ``|a - n| / max(|a|, |n|, floor)``, where
the floor is a thousandth of the largest analytic component of that
configuration, so components that are zero up to rounding do not dominate.
"""

from __future__ import annotations

import sys
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from structlog.stdlib import BoundLogger

from ..config import ExperimentConfig, GradcheckConfig
from ..constants import FINITE_DIFFERENCE_STEP, GRADCHECK_TOLERANCE
from ..exceptions import GradientCheckError
from ..models.dataset import gen_synthetic_dataset
from ..models.mlp import init_mlp, mlp_loss, mlp_loss_grad
from ..models.toy import (
    ToyTanhTask,
    TwoLayerTask,
    toy_loss_grad,
    twolayer_loss_grad,
)
from ..numerics import Vector
from .artifacts import CsvValue, write_config, write_csv

__all__ = [
    "FAMILIES",
    "GRADCHECK_COLUMNS",
    "CaseFactory",
    "GradientCase",
    "Offender",
    "central_difference",
    "cmd_gradcheck",
    "relative_errors",
]

GRADCHECK_COLUMNS = ("family", "configurations", "max_rel_error", "passed")

_MAX_LISTED = 20


@dataclass(frozen=True)
class GradientCase:
    """One configuration of a model family to audit."""

    params: Vector
    """Parameters at which the gradient is checked."""

    loss: Callable[[Vector], float]
    """Loss as a function of the parameters."""

    grad: Vector
    """Analytic gradient at ``params``."""


@dataclass(frozen=True)
class Offender:
    """A gradient component outside the tolerance."""

    family: str
    configuration: int
    parameter: int
    analytic: float
    numeric: float
    error: float

    def __str__(self) -> str:
        return (
            f"{self.family}[{self.configuration}] parameter"
            f" {self.parameter}: analytic {self.analytic:.10g}, numeric"
            f" {self.numeric:.10g}, relative error {self.error:.3g}"
        )


CaseFactory = Callable[[np.random.Generator, GradcheckConfig], GradientCase]
"""Draws one random configuration of a model family."""


def _toy_case(
    rng: np.random.Generator, settings: GradcheckConfig
) -> GradientCase:
    task = ToyTanhTask(
        x=float(rng.uniform(-0.499, 0.499)), r=float(rng.uniform(0.001, 1.0))
    )
    p = rng.uniform(-3.0, 3.0, size=1)
    _, grad = toy_loss_grad(float(p[0]), task)
    return GradientCase(
        p, lambda v: toy_loss_grad(float(v[0]), task)[0], np.array([grad])
    )


def _two_layer_case(
    rng: np.random.Generator, settings: GradcheckConfig
) -> GradientCase:
    task = TwoLayerTask(
        x=float(rng.uniform(-0.5, 0.5)),
        r=float(rng.uniform(0.0, 1.0)),
        c=float(rng.uniform(0.4, 0.6)),
    )
    p = rng.uniform(-6.0, 6.0, size=1)
    _, grad = twolayer_loss_grad(float(p[0]), task)
    return GradientCase(
        p,
        lambda v: twolayer_loss_grad(float(v[0]), task)[0],
        np.array([grad]),
    )


def _mlp_case(
    rng: np.random.Generator, settings: GradcheckConfig
) -> GradientCase:
    dims = settings.mlp_dims
    seed = int(rng.integers(2**31))
    model = init_mlp(dims, seed=seed)
    batch = gen_synthetic_dataset(seed, settings.mlp_batch, dims[0], dims[-1])
    _, grad = mlp_loss_grad(model, batch)
    return GradientCase(
        model.weights,
        lambda v: mlp_loss(model.with_weights(v), batch),
        grad,
    )


FAMILIES: Mapping[str, CaseFactory] = {
    "toy-tanh": _toy_case,
    "two-layer": _two_layer_case,
    "mlp": _mlp_case,
}
"""Model families audited by default."""


def central_difference(
    loss: Callable[[Vector], float], params: Vector
) -> Vector:
    """Central-difference gradient with steps of ``1e-6·max(1, |θᵢ|)``."""
    numeric = np.empty_like(params)
    for i in range(params.size):
        h = FINITE_DIFFERENCE_STEP * max(1.0, abs(float(params[i])))
        plus = params.copy()
        minus = params.copy()
        plus[i] += h
        minus[i] -= h
        numeric[i] = (loss(plus) - loss(minus)) / (plus[i] - minus[i])
    return numeric


def relative_errors(analytic: Vector, numeric: Vector) -> Vector:
    """Componentwise relative error of an analytic gradient."""
    if analytic.size == 0:
        return np.zeros(0)
    floor = max(1e-3 * float(np.max(np.abs(analytic))), sys.float_info.min)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def _audit(
    family: str, factory: CaseFactory, settings: GradcheckConfig, seed: int
) -> tuple[float, list[Offender]]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    offenders = []
    for configuration in range(settings.configurations):
        case = factory(rng, settings)
        numeric = central_difference(case.loss, case.params)
        errors = relative_errors(case.grad, numeric)
        if errors.size:
            worst = max(worst, float(np.max(errors)))
        for i in np.flatnonzero(~(errors < GRADCHECK_TOLERANCE)):
            offenders.append(
                Offender(
                    family=family,
                    configuration=configuration,
                    parameter=int(i),
                    analytic=float(case.grad[i]),
                    numeric=float(numeric[i]),
                    error=float(errors[i]),
                )
            )
    return worst, offenders


def cmd_gradcheck(
    experiment: ExperimentConfig,
    out_dir: Path,
    logger: BoundLogger,
    families: Mapping[str, CaseFactory] | None = None,
) -> list[Path]:
    """Audit the analytic gradient of every model family.

    Writes ``gradcheck.csv`` with the largest relative error per family.  A
    family with no parameters passes vacuously.

    Parameters
    ----------
    experiment
        Experiment settings, of which the ``gradcheck`` section and the seed
        are used.
    out_dir
        Output directory.
    logger
        Logger to report per-family results to.
    families
        Families to audit, by default `FAMILIES`.

    Raises
    ------
    GradientCheckError
        Raised after the report is written if any component's relative error
        is not below ``1e-5``.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_config(out_dir, experiment)]
    settings = experiment.gradcheck
    rows: list[dict[str, CsvValue]] = []
    offenders: list[Offender] = []
    for index, (family, factory) in enumerate((families or FAMILIES).items()):
        worst, found = _audit(
            family, factory, settings, experiment.seed + index
        )
        offenders.extend(found)
        rows.append(
            {
                "family": family,
                "configurations": settings.configurations,
                "max_rel_error": worst,
                "passed": not found,
            }
        )
        logger.info(
            "Audited gradient",
            family=family,
            max_rel_error=worst,
            passed=not found,
        )
    written.append(
        write_csv(out_dir / "gradcheck.csv", GRADCHECK_COLUMNS, rows)
    )
    if offenders:
        listed = "\n".join(str(o) for o in offenders[:_MAX_LISTED])
        more = len(offenders) - _MAX_LISTED
        if more > 0:
            listed += f"\n... and {more} more"
        msg = f"{len(offenders)} gradient components out of tolerance:\n"
        raise GradientCheckError(msg + listed)
    return written
