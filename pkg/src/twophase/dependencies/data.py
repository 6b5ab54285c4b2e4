"""Dependency that builds objectives and caches their training data."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog
from pydantic import ValidationError

from ..config import (
    DataConfig,
    DataSource,
    ExperimentConfig,
    ObjectiveKind,
    config,
)
from ..constants import MNIST_CLASSES
from ..diagnostics.curves import toy_margin
from ..exceptions import UsageError
from ..models.dataset import (
    Dataset,
    gen_synthetic_dataset,
    load_idx,
    split_subsets,
)
from ..models.mlp import init_mlp, mlp_forward, mlp_loss
from ..models.objective import (
    MlpObjective,
    Objective,
    QuadraticObjective,
    RosenbrockObjective,
    ToyObjective,
)
from ..models.toy import ToyTanhTask, TwoLayerTask
from ..numerics import Matrix, Vector, as_vector

__all__ = [
    "DatasetDependency",
    "Workload",
    "WorkloadDependency",
    "dataset_dependency",
    "workload_dependency",
]

_ROSENBROCK_START = (-1.2, 1.0)


@dataclass(frozen=True)
class Workload:
    """An objective ready to train, with everything needed to report on it."""

    objective: Objective
    """Full-batch training objective."""

    initial: Vector
    """Starting parameters."""

    train: Dataset | None = None
    """Training examples of the network objective."""

    validation: Dataset | None = None
    """Held-out examples of the network objective."""

    @property
    def output_width(self) -> int:
        """Width of the model output, M."""
        return self.train.output_width if self.train else 1

    def predictions(self, params: Vector, dataset: Dataset) -> Matrix:
        """Network predictions for a dataset."""
        if not isinstance(self.objective, MlpObjective):
            raise TypeError("Only network objectives make predictions")
        return mlp_forward(self.objective.model(params), dataset.inputs)

    def mse(self, params: Vector, dataset: Dataset) -> float:
        """Network mean squared error over a dataset."""
        if not isinstance(self.objective, MlpObjective):
            raise TypeError("Only network objectives are scored on data")
        model = self.objective.model(params)
        return mlp_loss(model, dataset, self.objective.threads)


class DatasetDependency:
    """Maintain a cache of loaded IDX datasets.

    Loading and decoding the full MNIST training set takes long enough that
    the three arms of a comparison should share it, so every image and label
    file pair is read only once per process.
    """

    def __init__(self) -> None:
        self._cache: dict[tuple[Path, Path], Dataset] = {}

    def __call__(
        self, data: DataConfig, input_width: int, output_width: int, seed: int
    ) -> tuple[Dataset, Dataset]:
        """Get the training and validation subsets.

        Parameters
        ----------
        data
            Data settings.
        input_width
            Input width of the network, used for synthetic data.
        output_width
            Output width of the network, used for synthetic data.
        seed
            Experiment seed, used unless the data settings carry their own.

        Returns
        -------
        tuple of Dataset
            Disjoint training and validation subsets.

        Raises
        ------
        IngestError
            Raised if the IDX files cannot be read.
        UsageError
            Raised if MNIST is selected without file paths or the network
            does not fit the images.
        """
        split_seed = seed if data.split_seed is None else data.split_seed
        if data.source == DataSource.synthetic:
            full = gen_synthetic_dataset(
                seed,
                data.train + data.validation,
                input_width,
                output_width,
            )
        else:
            if data.images is None or data.labels is None:
                msg = "data.images and data.labels are required for MNIST"
                raise UsageError(msg)
            full = self._load(data.images, data.labels)
            if full.input_width != input_width:
                msg = (
                    f"Images have {full.input_width} pixels but the network"
                    f" expects {input_width} inputs"
                )
                raise UsageError(msg)
            if output_width != MNIST_CLASSES:
                msg = f"MNIST has {MNIST_CLASSES} classes, not {output_width}"
                raise UsageError(msg)
        return split_subsets(full, data.train, data.validation, split_seed)

    def clear(self) -> None:
        """Drop all cached datasets."""
        self._cache.clear()

    def _load(self, images: Path, labels: Path) -> Dataset:
        key = (images.resolve(), labels.resolve())
        if key not in self._cache:
            self._cache[key] = load_idx(images, labels)
        return self._cache[key]


dataset_dependency = DatasetDependency()
"""The dependency that caches loaded datasets."""


class WorkloadDependency:
    """Build the objective and starting point an experiment trains on."""

    def __init__(self, datasets: DatasetDependency) -> None:
        self._datasets = datasets

    def __call__(self, experiment: ExperimentConfig) -> Workload:
        """Build the workload selected by ``experiment.objective``.

        Raises
        ------
        IngestError
            Raised if the training data cannot be read.
        UsageError
            Raised if the settings do not describe a valid objective.
        """
        logger = structlog.get_logger(config.name)
        kind = experiment.objective
        logger.debug("Building objective", objective=kind.value)
        try:
            match kind:
                case ObjectiveKind.mlp:
                    return self._mlp(experiment)
                case ObjectiveKind.quadratic:
                    quadratic = QuadraticObjective.random(
                        experiment.quadratic.dimension,
                        experiment.seed,
                        experiment.quadratic.condition,
                    )
                    initial = np.zeros(quadratic.dimension)
                    return Workload(quadratic, initial)
                case ObjectiveKind.rosenbrock:
                    start = as_vector(_ROSENBROCK_START)
                    return Workload(RosenbrockObjective(), start)
                case ObjectiveKind.toy_tanh | ObjectiveKind.two_layer:
                    return self._toy(experiment)
        except ValidationError as e:
            raise UsageError(f"Invalid {kind.value} settings:\n{e}") from e
        raise UsageError(f"Unknown objective {kind}")

    def _mlp(self, experiment: ExperimentConfig) -> Workload:
        dims = experiment.model.dims
        train, validation = self._datasets(
            experiment.data, dims[0], dims[-1], experiment.seed
        )
        init_seed = experiment.model.init_seed
        model = init_mlp(
            dims,
            experiment.model.activation,
            experiment.seed if init_seed is None else init_seed,
        )
        objective = MlpObjective(
            dims, experiment.model.activation, train, config.resolved_threads
        )
        return Workload(objective, model.weights, train, validation)

    def _toy(self, experiment: ExperimentConfig) -> Workload:
        toy = experiment.toy
        task: ToyTanhTask | TwoLayerTask
        if experiment.objective == ObjectiveKind.toy_tanh:
            task = ToyTanhTask(x=toy.x, r=toy.r)
        else:
            task = TwoLayerTask(x=toy.x, r=toy.r, c=toy.c)
        start = toy_margin(task) if toy.start is None else toy.start
        return Workload(ToyObjective.for_task(task), as_vector([start]))


workload_dependency = WorkloadDependency(dataset_dependency)
"""The dependency that builds training workloads."""
