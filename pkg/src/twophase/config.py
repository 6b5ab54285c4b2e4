"""Configuration definition."""

from __future__ import annotations

import hashlib
import json
import os
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Any

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveInt,
    ValidationError,
)
from pydantic_settings import BaseSettings, SettingsConfigDict
from safir.logging import LogLevel, Profile

from .constants import (
    DEFAULT_MLP_DIMS,
    DIGEST_LENGTH,
    MNIST_CLASSES,
    TWO_LAYER_C_SWEEP,
    TWO_LAYER_R,
    TWO_LAYER_X,
)
from .controller import Mode, SwapMode, TwoPhaseConfig
from .diagnostics.convexity import ConvexityProbe
from .exceptions import UsageError
from .models.mlp import Activation
from .optim.adam import AdamConfig
from .optim.cg import CgConfig
from .optim.linesearch import LineSearchConfig

__all__ = [
    "CompareConfig",
    "Config",
    "DataConfig",
    "DataSource",
    "ExperimentConfig",
    "GradcheckConfig",
    "LandscapeConfig",
    "ModelConfig",
    "ObjectiveKind",
    "ProbeConfig",
    "QuadraticConfig",
    "ToyConfig",
    "ToyFamily",
    "TwoPhaseSection",
    "config",
    "load_experiment",
]


class Config(BaseSettings):
    """Process-level configuration for twophase."""

    model_config = SettingsConfigDict(
        env_prefix="TWOPHASE_", case_sensitive=False
    )

    log_level: Annotated[
        LogLevel,
        Field(title="Log level of the application's logger"),
    ] = LogLevel.INFO

    name: Annotated[str, Field(title="Application name")] = "twophase"

    profile: Annotated[
        Profile,
        Field(
            title="Application logging profile",
            description=(
                "The development profile logs human-readable lines, the"
                " production profile JSON"
            ),
        ),
    ] = Profile.development

    threads: Annotated[
        NonNegativeInt,
        Field(
            title="Evaluation threads",
            description=(
                "Maximum number of threads evaluating losses and gradients,"
                " or 0 to use one per CPU"
            ),
        ),
    ] = 0

    @property
    def resolved_threads(self) -> int:
        """Thread cap with the automatic setting resolved."""
        return self.threads or os.cpu_count() or 1


config = Config()
"""Configuration for twophase."""


class ObjectiveKind(StrEnum):
    """Objective minimized by ``train`` and ``compare``."""

    mlp = "mlp"
    quadratic = "quadratic"
    rosenbrock = "rosenbrock"
    toy_tanh = "toy-tanh"
    two_layer = "two-layer"


class DataSource(StrEnum):
    """Origin of the training data of the network objective."""

    mnist = "mnist"
    synthetic = "synthetic"


class ToyFamily(StrEnum):
    """Family of one-dimensional toy tasks."""

    toy_tanh = "toy-tanh"
    two_layer = "two-layer"


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ModelConfig(_Section):
    """Network architecture."""

    dims: Annotated[
        tuple[PositiveInt, ...],
        Field(title="Layer widths from input to output", min_length=2),
    ] = DEFAULT_MLP_DIMS

    activation: Annotated[
        Activation, Field(title="Hidden-layer activation")
    ] = Activation.tanh

    init_seed: Annotated[
        NonNegativeInt | None,
        Field(
            title="Seed of the weight initialization",
            description="Defaults to the experiment seed",
        ),
    ] = None


class DataConfig(_Section):
    """Training and validation data."""

    source: Annotated[DataSource, Field(title="Data source")] = (
        DataSource.synthetic
    )

    images: Annotated[
        Path | None, Field(title="IDX image file, possibly gzipped")
    ] = None

    labels: Annotated[
        Path | None, Field(title="IDX label file, possibly gzipped")
    ] = None

    train: Annotated[PositiveInt, Field(title="Training examples")] = 5000

    validation: Annotated[
        NonNegativeInt, Field(title="Validation examples")
    ] = 1000

    split_seed: Annotated[
        NonNegativeInt | None,
        Field(
            title="Seed of the subset selection",
            description="Defaults to the experiment seed",
        ),
    ] = None


class QuadraticConfig(_Section):
    """Random convex quadratic test objective."""

    dimension: Annotated[PositiveInt, Field(title="Number of parameters")] = (
        10
    )

    condition: Annotated[
        float, Field(title="Condition number of the Hessian", ge=1)
    ] = 10.0


class ToyConfig(_Section):
    """One-dimensional toy objective for ``train`` and ``compare``."""

    x: Annotated[float, Field(title="Input")] = 0.25

    r: Annotated[float, Field(title="Reference output")] = 0.5

    c: Annotated[float, Field(title="Second-branch weight")] = 0.60

    start: Annotated[
        float | None,
        Field(
            title="Starting parameter",
            description="Defaults to the saturated margin of the landscape",
        ),
    ] = None


class LandscapeConfig(_Section):
    """Landscape scan of the toy families."""

    family: Annotated[ToyFamily, Field(title="Toy family")] = (
        ToyFamily.toy_tanh
    )

    tasks: Annotated[
        PositiveInt, Field(title="Random single-layer tasks to draw")
    ] = 5

    p_min: Annotated[float, Field(title="Lower end of the sweep")] = -6.0

    p_max: Annotated[float, Field(title="Upper end of the sweep")] = 6.0

    points: Annotated[
        int, Field(title="Points in landscape.csv", ge=2)
    ] = 1200

    scan_points: Annotated[
        int,
        Field(title="Points of the grid used to locate minima", ge=3),
    ] = 10_000

    c_sweep: Annotated[
        tuple[float, ...],
        Field(title="Second-branch weights of the two-layer sweep"),
    ] = TWO_LAYER_C_SWEEP

    x: Annotated[float, Field(title="Two-layer input")] = TWO_LAYER_X

    r: Annotated[float, Field(title="Two-layer reference")] = TWO_LAYER_R

    trajectories: Annotated[
        bool,
        Field(
            title="Write descent trajectories",
            description="Descend every single-layer task from both margins"
            " and write trajectory.csv",
        ),
    ] = True


class CompareConfig(_Section):
    """Three-way comparison."""

    cost_budget: Annotated[
        float | None,
        Field(
            title="Cost budget of every arm",
            description="Defaults to the cost of the Adam-only arm",
            gt=0,
        ),
    ] = None


class GradcheckConfig(_Section):
    """Finite-difference audit of the analytic gradients."""

    configurations: Annotated[
        PositiveInt, Field(title="Random configurations per family")
    ] = 100

    mlp_dims: Annotated[
        tuple[PositiveInt, ...],
        Field(title="Network widths audited", min_length=2),
    ] = (4, 5, 3)

    mlp_batch: Annotated[
        PositiveInt, Field(title="Examples per audited batch")
    ] = 7


class ProbeConfig(_Section):
    """Convexity probing during training."""

    every: Annotated[
        NonNegativeInt,
        Field(
            title="Probe interval in epochs",
            description="0 disables probing and convexity.csv",
        ),
    ] = 0

    epsilon: Annotated[float, Field(title="Finite-difference step", gt=0)] = (
        1e-5
    )

    directions_per_point: Annotated[
        PositiveInt, Field(title="Directions per probed point")
    ] = 8

    def probe(self) -> ConvexityProbe:
        """Probe settings."""
        return ConvexityProbe(
            epsilon=self.epsilon,
            directions_per_point=self.directions_per_point,
        )


class TwoPhaseSection(_Section):
    """Swap detection and schedule."""

    gnfact: Annotated[float, Field(title="Swap factor", gt=0, lt=1)] = 0.9

    smoothing_window: Annotated[
        PositiveInt, Field(title="Smoothing window in epochs")
    ] = 5

    max_adam_epochs: Annotated[
        PositiveInt | None, Field(title="Cap on Adam epochs")
    ] = None

    swap_mode: Annotated[SwapMode, Field(title="Swap decision rule")] = (
        SwapMode.detect
    )

    adam_fraction: Annotated[
        float, Field(title="Adam share in fixed mode", gt=0, lt=1)
    ] = 0.3

    cost_budget: Annotated[
        float | None, Field(title="Cost budget", gt=0)
    ] = None

    cg: CgConfig = CgConfig()


class ExperimentConfig(_Section):
    """Settings of one experiment, read from a YAML file."""

    seed: Annotated[int, Field(title="Experiment seed", ge=0)] = 1

    objective: Annotated[ObjectiveKind, Field(title="Objective")] = (
        ObjectiveKind.mlp
    )

    mode: Annotated[Mode, Field(title="Training schedule")] = Mode.two_phase

    epochs: Annotated[int, Field(title="Total epochs", ge=2)] = 60

    model: ModelConfig = ModelConfig()

    data: DataConfig = DataConfig()

    quadratic: QuadraticConfig = QuadraticConfig()

    toy: ToyConfig = ToyConfig()

    twophase: TwoPhaseSection = TwoPhaseSection()

    adam: AdamConfig = AdamConfig()

    line_search: LineSearchConfig = LineSearchConfig()

    landscape: LandscapeConfig = LandscapeConfig()

    compare: CompareConfig = CompareConfig()

    gradcheck: GradcheckConfig = GradcheckConfig()

    probe: ProbeConfig = ProbeConfig()

    @property
    def output_width(self) -> int:
        """Width of the network output."""
        if self.data.source == DataSource.mnist:
            return MNIST_CLASSES
        return self.model.dims[-1]

    def two_phase_config(
        self, cost_budget: float | None = None
    ) -> TwoPhaseConfig:
        """Controller settings, optionally with a different cost budget."""
        section = self.twophase
        try:
            return self._two_phase_config(section, cost_budget)
        except ValidationError as e:
            raise UsageError(f"Invalid training settings:\n{e}") from e

    def _two_phase_config(
        self, section: TwoPhaseSection, cost_budget: float | None
    ) -> TwoPhaseConfig:
        return TwoPhaseConfig(
            total_epochs=self.epochs,
            gnfact=section.gnfact,
            smoothing_window=section.smoothing_window,
            max_adam_epochs=section.max_adam_epochs,
            swap_mode=section.swap_mode,
            adam_fraction=section.adam_fraction,
            cost_budget=cost_budget or section.cost_budget,
            adam=self.adam,
            ls=self.line_search,
            cg=section.cg,
            seed=self.seed,
        )

    def with_seed(self, seed: int | None) -> ExperimentConfig:
        """Return a copy with the seed overridden, if one is given."""
        if seed is None:
            return self
        if seed < 0:
            raise UsageError(f"Seed must be nonnegative: {seed}")
        return self.model_copy(update={"seed": seed})

    def resolved(self) -> dict[str, Any]:
        """Plain data form of the configuration, defaults included."""
        return self.model_dump(mode="json")

    def digest(self) -> str:
        """Short SHA-256 digest of the canonical JSON form."""
        canonical = json.dumps(
            self.resolved(), sort_keys=True, separators=(",", ":")
        )
        digest = hashlib.sha256(canonical.encode()).hexdigest()
        return digest[:DIGEST_LENGTH]


def load_experiment(path: Path | None) -> ExperimentConfig:
    """Load and validate an experiment configuration.

    Parameters
    ----------
    path
        YAML file, or `None` for the defaults.

    Raises
    ------
    UsageError
        Raised if the file cannot be read, is not a YAML mapping, or
        contains unknown keys or invalid values.
    """
    if path is None:
        return ExperimentConfig()
    try:
        with path.open("r") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as e:
        raise UsageError(f"Cannot read {path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise UsageError(f"{path} does not contain a YAML mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"Invalid configuration in {path}:\n{e}") from e
