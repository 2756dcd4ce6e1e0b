"""CSV formats.

* density: header ``x,value``, one row per node, nodes strictly increasing
  and uniformly spaced;
* time-dependent density: header ``t,x,value``, rows grouped by ``t``
  ascending and ``x`` ascending within each group;
* scan trace: header ``theta,objective``.

Numbers are written with 17 significant digits so output is byte-identical
across runs and round-trips exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .density import Grid1D, GridDensity
from .errors import InputError

__all__ = [
    "fmt", "write_density_csv", "read_density_csv", "write_time_csv",
    "read_time_csv", "write_trace_csv", "write_xy_csv",
]

SPACING_RTOL = 1e-9


def fmt(v: float) -> str:
    return "%.17g" % v


def write_xy_csv(path, x, values, header=("x", "value")):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for xi, vi in zip(x, values):
            fh.write(f"{fmt(xi)},{fmt(vi)}\n")


def write_density_csv(path, density: GridDensity):
    write_xy_csv(path, density.grid.nodes, density.values)


def write_time_csv(path, times: Sequence[float], densities: Sequence[GridDensity]):
    with open(path, "w", newline="") as fh:
        fh.write("t,x,value\n")
        for t, d in zip(times, densities):
            ts = fmt(t)
            for xi, vi in zip(d.grid.nodes, d.values):
                fh.write(f"{ts},{fmt(xi)},{fmt(vi)}\n")


def write_trace_csv(path, trace: Iterable[tuple[float, float]]):
    write_xy_csv(path, *zip(*trace), header=("theta", "objective"))


def _rows(path, header):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != list(header):
            raise InputError(f"{path}: expected header {','.join(header)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise InputError(f"{path}:{lineno}: not a number") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows)


def _grid_from_nodes(x, where) -> Grid1D:
    if len(x) < 3:
        raise InputError(f"{where}: need at least 3 nodes")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise InputError(f"{where}: nodes must be strictly increasing")
    grid = Grid1D(float(x[0]), float(x[-1]), len(x))
    if np.max(np.abs(dx - grid.h)) > SPACING_RTOL * grid.h:
        raise InputError(f"{where}: nodes are not uniformly spaced")
    return grid


def read_density_csv(path) -> GridDensity:
    """Read an ``x,value`` file (values are not renormalized)."""
    data = _rows(path, ("x", "value"))
    grid = _grid_from_nodes(data[:, 0], path)
    try:
        return GridDensity(grid, data[:, 1])
    except ArithmeticError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_time_csv(path) -> tuple[list[float], list[GridDensity]]:
    """Read a ``t,x,value`` file into times and per-time densities."""
    data = _rows(path, ("t", "x", "value"))
    t = data[:, 0]
    if np.any(np.diff(t) < 0):
        raise InputError(f"{path}: rows must be grouped by ascending t")
    times = list(np.unique(t))
    densities = []
    grid = None
    for ti in times:
        block = data[t == ti]
        g = _grid_from_nodes(block[:, 1], f"{path} (t={ti:g})")
        if grid is None:
            grid = g
        elif g != grid:
            raise InputError(f"{path}: t={ti:g} uses a different x grid")
        try:
            densities.append(GridDensity(grid, block[:, 2]))
        except ArithmeticError as exc:
            raise InputError(f"{path} (t={ti:g}): {exc}") from None
    return [float(v) for v in times], densities
