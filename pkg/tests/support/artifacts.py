"""Helpers for reading command artifacts."""

from __future__ import annotations

import csv
from pathlib import Path

__all__ = ["read_csv"]


def read_csv(path: Path) -> list[dict[str, str]]:
    """Read a CSV artifact as one dictionary per data row."""
    with path.open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
