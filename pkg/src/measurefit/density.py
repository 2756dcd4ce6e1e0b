"""Uniform grids, trapezoid quadrature and the Hellinger distance.

Every density in the package lives on a :class:`Grid1D`, a uniform grid on
a truncated interval standing in for the real line.  Integrals are composite
trapezoid sums on that grid, so "mass" always means trapezoid mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridError, NumericalError

__all__ = [
    "Grid1D", "GridDensity", "TailMassWarning",
    "trapezoid", "cumulative_trapezoid", "normalize", "squared_hellinger",
    "hellinger", "resample", "tail_mass_fraction", "check_tail_mass",
]

DEFAULT_LO = -40.0
DEFAULT_HI = 40.0
MASS_TOL = 1e-6
TAIL_FRACTION = 0.05
TAIL_MASS_TOL = 1e-8


class TailMassWarning(UserWarning):
    """A density carries non-negligible mass near the ends of its grid."""


@dataclass(frozen=True)
class Grid1D:
    lo: float = DEFAULT_LO
    hi: float = DEFAULT_HI
    n: int = 4001

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise GridError(f"grid needs an integer node count >= 3, got {self.n}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise GridError(f"grid needs finite lo < hi, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        x = self.lo + self.h * np.arange(self.n)
        x[-1] = self.hi
        return x

    def index_of(self, x: float, tol: float = 1e-9) -> int:
        """Index of the node at ``x``; raises if ``x`` is not a node."""
        k = int(round((x - self.lo) / self.h))
        if not 0 <= k < self.n or abs(self.nodes[k] - x) > tol * self.h:
            raise GridError(f"{x} is not a node of {self}")
        return k

    def nearest_index(self, x: float) -> int:
        return int(np.clip(round((x - self.lo) / self.h), 0, self.n - 1))

    def contains(self, other: "Grid1D") -> bool:
        slack = 1e-12 * max(1.0, abs(self.lo), abs(self.hi))
        return other.lo >= self.lo - slack and other.hi <= self.hi + slack


class GridDensity:
    """Nonnegative, finite density values on a grid.

    Instances are immutable.  They need not have unit mass; use
    :func:`normalize` before comparing densities.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid1D, values):
        v = np.array(values, dtype=np.float64)
        if v.shape != (grid.n,):
            raise GridError(f"expected {grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalError("density has non-finite values")
        if np.any(v < 0):
            raise NumericalError(f"density has negative values (min {v.min():.3g})")
        v.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("GridDensity is immutable")

    def __reduce__(self):
        return (GridDensity, (self.grid, self.values))

    def __repr__(self):
        return f"GridDensity({self.grid}, mass={self.mass:.6g})"

    @classmethod
    def from_function(cls, grid: Grid1D, f) -> "GridDensity":
        """Sample a vectorised ``f`` on the grid and normalize."""
        return normalize(cls(grid, f(grid.nodes)))

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def mass(self) -> float:
        return trapezoid(self.values, self.grid)


def trapezoid(values, grid: Grid1D) -> float:
    """Composite trapezoid rule on a uniform grid."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (grid.n,):
        raise GridError(f"expected {grid.n} values, got shape {v.shape}")
    return float(grid.h * (v.sum() - 0.5 * (v[0] + v[-1])))


def cumulative_trapezoid(values, grid: Grid1D, start: int = 0) -> np.ndarray:
    """Trapezoid integral from node ``start`` to every node (signed)."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (grid.n,):
        raise GridError(f"expected {grid.n} values, got shape {v.shape}")
    cum = np.zeros(grid.n)
    cum[1:] = np.cumsum(0.5 * grid.h * (v[1:] + v[:-1]))
    return cum - cum[start]


def normalize(d: GridDensity) -> GridDensity:
    mass = d.mass
    if not np.isfinite(mass) or mass <= 0:
        raise NumericalError(f"cannot normalize a density with mass {mass}")
    return GridDensity(d.grid, d.values / mass)


def _check_pair(p: GridDensity, q: GridDensity):
    if p.grid != q.grid:
        raise GridError(f"densities live on different grids: {p.grid} vs {q.grid}")
    for name, d in (("p", p), ("q", q)):
        if abs(d.mass - 1.0) > MASS_TOL:
            raise NumericalError(f"{name} is not normalized (mass {d.mass:.9g})")


def squared_hellinger(p: GridDensity, q: GridDensity) -> float:
    """H^2 = 1/2 * int (sqrt p - sqrt q)^2 dx, clamped into [0, 1]."""
    _check_pair(p, q)
    diff = np.sqrt(p.values) - np.sqrt(q.values)
    return float(np.clip(0.5 * trapezoid(diff * diff, p.grid), 0.0, 1.0))


def hellinger(p: GridDensity, q: GridDensity) -> float:
    """Hellinger distance between two normalized densities on the same grid."""
    return float(np.sqrt(squared_hellinger(p, q)))


def resample(d: GridDensity, target: Grid1D) -> GridDensity:
    """Linearly interpolate onto ``target`` (which must lie inside d's range)."""
    if not d.grid.contains(target):
        raise GridError(f"target {target} extends beyond source {d.grid}")
    if target == d.grid:
        return d if abs(d.mass - 1.0) <= 1e-12 else normalize(d)
    values = np.interp(target.nodes, d.grid.nodes, d.values)
    return normalize(GridDensity(target, values))


def tail_mass_fraction(d: GridDensity, fraction: float = TAIL_FRACTION) -> float:
    """Share of the mass lying in the outer ``fraction`` of the domain at each end."""
    grid = d.grid
    k = max(1, int(np.floor(fraction * (grid.n - 1) + 1e-9)))
    v = d.values
    h = grid.h
    left = h * (v[: k + 1].sum() - 0.5 * (v[0] + v[k]))
    right = h * (v[-k - 1:].sum() - 0.5 * (v[-k - 1] + v[-1]))
    mass = d.mass
    if mass <= 0:
        return 0.0
    return float((left + right) / mass)


def check_tail_mass(d: GridDensity, tol: float = TAIL_MASS_TOL, label: str = "density") -> float:
    """Warn when truncating the real line to the grid may bias comparisons."""
    frac = tail_mass_fraction(d)
    if frac > tol:
        warnings.warn(
            f"{label}: {frac:.3g} of the mass lies in the outer {TAIL_FRACTION:.0%} "
            f"of [{d.grid.lo:g}, {d.grid.hi:g}]; widen the grid",
            TailMassWarning, stacklevel=2)
    return frac
