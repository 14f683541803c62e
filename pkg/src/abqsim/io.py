"""Deterministic CSV output.

Floats are written with 17 significant digits so every value round-trips
exactly; line endings are always ``\\n``.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Wavefunction2D

__all__ = ["format_value", "write_csv", "write_snapshot", "write_profile", "read_csv"]


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_csv(path):
    """Header and rows as floats where possible (for tests and round trips)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            parsed = []
            for v in row:
                try:
                    parsed.append(float(v))
                except ValueError:
                    parsed.append(v)
            rows.append(parsed)
    return header, rows


def write_snapshot(directory, step: int, state: Wavefunction2D) -> Path:
    """Dump ``state`` as ``snap_{step:06}.csv`` with columns ``i,j,re,im`` in row-major order."""
    nx, ny = state.grid.shape
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    amp = state.amplitudes.ravel()
    rows = zip(ii.ravel(), jj.ravel(), amp.real, amp.imag)
    return write_csv(Path(directory) / f"snap_{step:06}.csv", ["i", "j", "re", "im"], rows)


def write_profile(path, y: np.ndarray, density: np.ndarray) -> Path:
    return write_csv(path, ["y", "density"], zip(np.asarray(y, float), np.asarray(density, float)))
