"""Tests for the convexity probe."""

from __future__ import annotations

import numpy as np
import pytest

from twophase.diagnostics.convexity import (
    ConvexityProbe,
    directional_curvature,
    probe_convexity,
)
from twophase.exceptions import ContractViolationError, ProbeError
from twophase.models.objective import (
    Objective,
    QuadraticObjective,
    ToyObjective,
)
from twophase.models.toy import ToyTanhTask
from twophase.numerics import Vector

from ..support.oracles import toy_second_derivative


class Explodes(Objective):
    @property
    def dimension(self) -> int:
        return 1

    def loss(self, params: Vector) -> float:
        return float("inf")

    def loss_grad(self, params: Vector) -> tuple[float, Vector]:
        return self.loss(params), np.zeros(1)


def test_quadratic() -> None:
    identity = QuadraticObjective(np.eye(3), np.zeros(3))
    d = np.array([0.6, 0.0, 0.8])
    curvature = directional_curvature(identity, np.ones(3), d)
    assert curvature == pytest.approx(1.0, rel=1e-8)

    diagonal = QuadraticObjective(np.diag([1.0, 4.0]), np.zeros(2))
    e2 = np.array([0.0, 1.0])
    curvature = directional_curvature(diagonal, np.zeros(2), e2)
    assert curvature == pytest.approx(4.0, rel=1e-8)


@pytest.mark.parametrize("p", [-8.0, -1.0, 0.5, 4.0, 12.0])
def test_toy(p: float) -> None:
    task = ToyTanhTask(x=0.25, r=0.5)
    toy = ToyObjective.for_task(task)
    curvature = directional_curvature(toy, np.array([p]), np.ones(1))
    expected = toy_second_derivative(p, 0.25, 0.5, 100)
    assert curvature == pytest.approx(expected, rel=1e-4, abs=1e-8)


def test_toy_signs() -> None:
    task = ToyTanhTask(x=0.25, r=0.5)
    toy = ToyObjective.for_task(task)
    minimum = np.array([np.arctanh(0.005) / 0.25])
    assert directional_curvature(toy, minimum, np.ones(1)) > 0.0
    margin = np.array([12.0])
    assert directional_curvature(toy, margin, np.ones(1)) < 0.0


def test_probe() -> None:
    quadratic = QuadraticObjective.random(6, seed=4, condition=5.0)
    probe = ConvexityProbe(directions_per_point=16)
    report = probe_convexity(quadratic, np.zeros(6), probe, seed=1)
    assert report.positive_fraction == 1.0
    assert report.min_curvature > 1.0 - 1e-6
    assert report.mean_curvature < 5.0 + 1e-6
    assert report == probe_convexity(quadratic, np.zeros(6), probe, seed=1)

    task = ToyTanhTask(x=0.25, r=0.5)
    toy = ToyObjective.for_task(task)
    report = probe_convexity(toy, np.array([12.0]))
    assert report.positive_fraction == 0.0
    assert report.min_curvature == report.mean_curvature


def test_errors() -> None:
    identity = QuadraticObjective(np.eye(2), np.zeros(2))
    with pytest.raises(ContractViolationError):
        directional_curvature(identity, np.zeros(2), np.array([1.0, 1.0]))
    with pytest.raises(ProbeError):
        directional_curvature(Explodes(), np.zeros(1), np.ones(1))
