"""Tests for the twophase command-line entry point."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from twophase.config import GradcheckConfig
from twophase.handlers import gradcheck
from twophase.handlers.gradcheck import GradientCase
from twophase.main import COMMANDS, build_parser, main

from .support.artifacts import read_csv


def test_parser() -> None:
    parser = build_parser()
    args = parser.parse_args(["train", "--seed", "4"])
    assert args.command == "train"
    assert args.seed == 4
    assert args.config is None
    assert args.out == Path()
    assert set(COMMANDS) == {"landscape", "train", "compare", "gradcheck"}


def test_usage_errors(data_dir: Path, tmp_path: Path) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        main(["fly"])
    assert excinfo.value.code == 2

    bad_key = ["train", "--config", str(data_dir / "bad-key.yaml")]
    assert main([*bad_key, "--out", str(tmp_path)]) == 2
    toy = ["train", "--config", str(data_dir / "toy.yaml")]
    assert main([*toy, "--out", str(tmp_path), "--seed", "-1"]) == 2
    assert not (tmp_path / "trace.csv").exists()


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.startswith("twophase ")


def test_train(data_dir: Path, tmp_path: Path) -> None:
    config = str(data_dir / "toy.yaml")
    out = tmp_path / "out"
    assert main(["train", "--config", config, "--out", str(out)]) == 0
    assert (out / "trace.csv").exists()
    assert (out / "summary.csv").exists()

    reseeded = tmp_path / "reseeded"
    argv = ["train", "--config", config, "--out", str(reseeded)]
    assert main([*argv, "--seed", "9"]) == 0
    assert "seed: 9" in (reseeded / "config.yaml").read_text()


def test_ingest_error(tmp_path: Path) -> None:
    config = tmp_path / "mnist.yaml"
    config.write_text(
        "objective: mlp\n"
        "data:\n"
        "  source: mnist\n"
        f"  images: {tmp_path / 'missing-images.gz'}\n"
        f"  labels: {tmp_path / 'missing-labels.gz'}\n"
    )
    argv = ["train", "--config", str(config), "--out", str(tmp_path)]
    assert main(argv) == 3


def test_numerical_error(tmp_path: Path) -> None:
    config = tmp_path / "explode.yaml"
    config.write_text("objective: quadratic\nadam:\n  lr: 1.0e+200\n")
    argv = ["train", "--config", str(config), "--out", str(tmp_path)]
    assert main(argv) == 4
    assert read_csv(tmp_path / "trace.csv") == []


def test_gradient_check_error(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    def broken(
        rng: np.random.Generator, settings: GradcheckConfig
    ) -> GradientCase:
        params = rng.uniform(1.0, 2.0, size=1)
        return GradientCase(params, lambda v: float(v[0] ** 2), -params)

    monkeypatch.setattr(gradcheck, "FAMILIES", {"broken": broken})
    config = tmp_path / "gradcheck.yaml"
    config.write_text("gradcheck:\n  configurations: 3\n")
    argv = ["gradcheck", "--config", str(config), "--out", str(tmp_path)]
    assert main(argv) == 5
    rows = read_csv(tmp_path / "gradcheck.csv")
    assert rows[0]["passed"] == "false"
