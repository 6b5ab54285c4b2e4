"""The ``landscape`` command: loss landscapes of the toy families."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np
from structlog.stdlib import BoundLogger

from ..config import ExperimentConfig, ToyFamily
from ..diagnostics.convexity import ConvexityProbe, directional_curvature
from ..diagnostics.curves import (
    convex_regions,
    count_peaks,
    descent_trajectory,
    local_minima,
    toy_margin,
)
from ..exceptions import UsageError
from ..models.objective import ToyObjective
from ..models.toy import ToyTanhTask, TwoLayerTask, gen_toy_tasks
from ..optim.linesearch import LineSearchConfig, golden_section
from .artifacts import CsvValue, write_config, write_csv

__all__ = [
    "BRANCH_COLUMNS",
    "LANDSCAPE_COLUMNS",
    "MINIMA_COLUMNS",
    "REGIONS_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "cmd_landscape",
]

LANDSCAPE_COLUMNS = ("task_id", "p", "loss", "dloss_dp", "curvature")
MINIMA_COLUMNS = ("task_id", "c", "p", "loss", "curvature")
REGIONS_COLUMNS = ("task_id", "c", "local_minima", "convex_regions")
TRAJECTORY_COLUMNS = (
    "task_id",
    "side",
    "epoch",
    "p",
    "loss",
    "grad_norm",
    "curvature",
)
BRANCH_COLUMNS = (
    "task_id",
    "side",
    "epochs",
    "peaks",
    "start_curvature",
    "min_terminal_curvature",
)

_POLISH = LineSearchConfig(tol=1e-10, max_evals=200)
_TERMINAL_SHARE = 0.1

Task = ToyTanhTask | TwoLayerTask


def _curvature(objective: ToyObjective, p: float) -> float:
    return directional_curvature(
        objective, np.array([p]), np.ones(1), ConvexityProbe()
    )


def _sweep(
    task_id: int, objective: ToyObjective, grid: Sequence[float]
) -> list[dict[str, CsvValue]]:
    rows: list[dict[str, CsvValue]] = []
    for p in grid:
        loss, grad = objective.loss_grad(np.array([p]))
        rows.append(
            {
                "task_id": task_id,
                "p": p,
                "loss": loss,
                "dloss_dp": float(grad[0]),
                "curvature": _curvature(objective, p),
            }
        )
    return rows


def _scan(
    task_id: int,
    c: float | None,
    objective: ToyObjective,
    grid: Sequence[float],
) -> tuple[list[dict[str, CsvValue]], dict[str, CsvValue]]:
    gradients = [float(objective.loss_grad(np.array([p]))[1][0]) for p in grid]
    curvatures = [_curvature(objective, p) for p in grid]
    minima = []
    for i in local_minima(gradients):
        lo, hi = grid[max(i - 2, 0)], grid[i]

        def phi(p: float) -> float:
            return objective.loss(np.array([p]))

        result = golden_section(phi, lo, (lo + hi) / 2.0, hi, _POLISH)
        minima.append(
            {
                "task_id": task_id,
                "c": c,
                "p": result.alpha,
                "loss": result.value,
                "curvature": _curvature(objective, result.alpha),
            }
        )
    region = {
        "task_id": task_id,
        "c": c,
        "local_minima": len(minima),
        "convex_regions": convex_regions(curvatures),
    }
    return minima, region


def _trajectories(
    tasks: Sequence[ToyTanhTask],
) -> tuple[list[dict[str, CsvValue]], list[dict[str, CsvValue]]]:
    steps: list[dict[str, CsvValue]] = []
    branches: list[dict[str, CsvValue]] = []
    for task_id, task in enumerate(tasks):
        if task.x == 0.0:
            continue
        objective = ToyObjective.for_task(task)
        for side in (1, -1):
            path = descent_trajectory(objective, toy_margin(task, side))
            curvatures = [_curvature(objective, p) for p in path.points]
            for row, p, curvature in zip(
                path.trace, path.points, curvatures, strict=True
            ):
                steps.append(
                    {
                        "task_id": task_id,
                        "side": side,
                        "epoch": row.epoch,
                        "p": p,
                        "loss": row.loss,
                        "grad_norm": row.grad_norm,
                        "curvature": curvature,
                    }
                )
            terminal = max(1, round(len(curvatures) * _TERMINAL_SHARE))
            branches.append(
                {
                    "task_id": task_id,
                    "side": side,
                    "epochs": len(path.trace),
                    "peaks": count_peaks(path.trace.grad_norms()),
                    "start_curvature": curvatures[0],
                    "min_terminal_curvature": min(curvatures[-terminal:]),
                }
            )
    return steps, branches


def cmd_landscape(
    experiment: ExperimentConfig, out_dir: Path, logger: BoundLogger
) -> list[Path]:
    """Scan the loss landscape of the configured toy family.

    Writes ``landscape.csv`` over a uniform grid, ``minima.csv`` with every
    local minimum of a finer scan grid polished by golden section, and
    ``regions.csv`` counting minima and convex regions per task.  For the
    two-layer family, one ``landscape_c<C>.csv`` per swept weight is also
    written.  For the single-layer family, ``trajectory.csv`` and
    ``branches.csv`` describe gradient descents from both margins.

    Returns
    -------
    list of Path
        Files written.

    Raises
    ------
    UsageError
        Raised if the sweep range is empty.
    """
    settings = experiment.landscape
    if not settings.p_min < settings.p_max:
        msg = f"Empty sweep range [{settings.p_min}, {settings.p_max}]"
        raise UsageError(msg)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_config(out_dir, experiment)]
    grid = np.linspace(settings.p_min, settings.p_max, settings.points)
    scan = np.linspace(settings.p_min, settings.p_max, settings.scan_points)

    tasks: list[Task]
    weights: list[float | None]
    if settings.family == ToyFamily.toy_tanh:
        tasks = list(gen_toy_tasks(experiment.seed, settings.tasks))
        weights = [None] * len(tasks)
    else:
        if not settings.c_sweep:
            raise UsageError("The two-layer sweep needs at least one weight")
        weights = list(settings.c_sweep)
        tasks = [
            TwoLayerTask(x=settings.x, r=settings.r, c=c)
            for c in settings.c_sweep
        ]

    landscape: list[dict[str, CsvValue]] = []
    minima: list[dict[str, CsvValue]] = []
    regions: list[dict[str, CsvValue]] = []
    for task_id, (task, c) in enumerate(zip(tasks, weights, strict=True)):
        objective = ToyObjective.for_task(task)
        rows = _sweep(task_id, objective, grid.tolist())
        landscape.extend(rows)
        if c is not None:
            path = out_dir / f"landscape_c{c:.2f}.csv"
            written.append(write_csv(path, LANDSCAPE_COLUMNS, rows))
        task_minima, region = _scan(task_id, c, objective, scan.tolist())
        minima.extend(task_minima)
        regions.append(region)
        logger.info(
            "Scanned landscape",
            family=settings.family.value,
            task_id=task_id,
            c=c,
            local_minima=region["local_minima"],
            convex_regions=region["convex_regions"],
        )

    written.append(
        write_csv(out_dir / "landscape.csv", LANDSCAPE_COLUMNS, landscape)
    )
    written.append(write_csv(out_dir / "minima.csv", MINIMA_COLUMNS, minima))
    written.append(
        write_csv(out_dir / "regions.csv", REGIONS_COLUMNS, regions)
    )
    if settings.family == ToyFamily.toy_tanh and settings.trajectories:
        toy_tasks = [t for t in tasks if isinstance(t, ToyTanhTask)]
        steps, branches = _trajectories(toy_tasks)
        written.append(
            write_csv(out_dir / "trajectory.csv", TRAJECTORY_COLUMNS, steps)
        )
        written.append(
            write_csv(out_dir / "branches.csv", BRANCH_COLUMNS, branches)
        )
    logger.info("Wrote landscape", out=str(out_dir), files=len(written))
    return written
