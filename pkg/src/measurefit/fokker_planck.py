"""Time-dependent Fokker-Planck solver with a point-mass initial condition.

Solves ``p_t = -d/dx [ b p - 1/2 d/dx (sigma^2 p) ]``, ``p(x, 0) = delta(x - x0)``
on a truncated interval with zero-flux (reflecting) ends.

Discretization
--------------
Finite volumes centred on the grid nodes (width ``h``, ``h/2`` at the two end
nodes), so total mass is exactly the trapezoid mass.  With ``D = sigma^2/2``
and ``g = D p`` the flux is ``F = w g - g'`` where ``w = b / D``.  Freezing
``w`` on each cell interface and integrating exactly gives the exponentially
fitted (Chang-Cooper / Scharfetter-Gummel) flux

    F_{i+1/2} = [B(-z) D_i p_i - B(z) D_{i+1} p_{i+1}] / h,   z = h w_{i+1/2},

with the Bernoulli function ``B(z) = z / (e^z - 1) > 0``.  Taking
``w_{i+1/2}`` as the mean of the nodal values makes the discrete steady state
identical to :func:`measurefit.stationary.stationary_density`.

Time stepping is Crank-Nicolson preceded by a single implicit Euler step that
damps the grid-scale content of the point mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import exprel

from .density import Grid1D, GridDensity, check_tail_mass, normalize
from .errors import GridError, SolverError
from .sde import SdeModel
from .tridiag import thomas, tridiag_matvec

__all__ = ["FpProblem", "FpSolution", "FpSettings", "solve", "bernoulli"]

NEGATIVE_TOL = 1e-12
MASS_STEP_TOL = 1e-8
MIN_FIRST_OUTPUT_STEPS = 10


def bernoulli(z):
    """``z / (e^z - 1)``, stable at ``z = 0`` and for large ``|z|``."""
    with np.errstate(over="ignore"):
        return 1.0 / exprel(np.asarray(z, dtype=np.float64))


@dataclass(frozen=True)
class FpProblem:
    """One forward solve.

    ``dt`` is used up to ``t_switch`` and ``dt_late`` (if given) afterwards.
    """

    model: SdeModel
    grid: Grid1D
    x0: float
    t_end: float
    dt: float
    output_times: Sequence[float]
    dt_late: float | None = None
    t_switch: float = 1.0

    def __post_init__(self):
        times = tuple(float(t) for t in self.output_times)
        object.__setattr__(self, "output_times", times)
        if not self.grid.lo <= self.x0 <= self.grid.hi:
            raise GridError(f"x0 = {self.x0} outside the grid")
        if not (self.t_end > 0 and self.dt > 0):
            raise ValueError("t_end and dt must be positive")
        if self.dt_late is not None and self.dt_late <= 0:
            raise ValueError("dt_late must be positive")
        if not times:
            raise ValueError("no output times requested")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("output times must be strictly increasing")
        if times[0] <= 0 or times[-1] > self.t_end * (1 + 1e-12):
            raise ValueError(f"output times must lie in (0, {self.t_end}]")
        if times[0] < MIN_FIRST_OUTPUT_STEPS * self.dt:
            raise ValueError(f"first output time {times[0]} is below "
                             f"{MIN_FIRST_OUTPUT_STEPS} * dt = {MIN_FIRST_OUTPUT_STEPS * self.dt}")
        gaps = np.diff((0.0,) + times)
        for t_prev, gap in zip((0.0,) + times, gaps):
            if self.step_at(t_prev) > gap * (1 + 1e-9):
                raise ValueError(f"time step exceeds the output-time gap {gap:g}")

    def step_at(self, t: float) -> float:
        if self.dt_late is not None and t >= self.t_switch * (1 - 1e-12):
            return self.dt_late
        return self.dt


@dataclass(frozen=True)
class FpSettings:
    """Numerics shared by every solve in a parameter scan."""

    grid: Grid1D = field(default_factory=Grid1D)
    x0: float = 0.0
    dt: float = 1e-3
    dt_late: float | None = 1e-2
    t_switch: float = 1.0

    def problem(self, model: SdeModel, output_times: Sequence[float]) -> FpProblem:
        times = tuple(float(t) for t in output_times)
        return FpProblem(model=model, grid=self.grid, x0=self.x0, t_end=times[-1],
                         dt=self.dt, output_times=times, dt_late=self.dt_late,
                         t_switch=self.t_switch)

    def with_(self, **changes) -> "FpSettings":
        return replace(self, **changes)


@dataclass(frozen=True)
class FpSolution:
    times: tuple[float, ...]
    densities: tuple[GridDensity, ...]

    @property
    def grid(self) -> Grid1D:
        return self.densities[0].grid

    def at(self, t: float) -> GridDensity:
        for ti, d in zip(self.times, self.densities):
            if abs(ti - t) <= 1e-9 * max(1.0, abs(t)):
                return d
        raise KeyError(t)


class _Operator:
    """Volume-weighted flux operator ``K`` with ``V dp/dt = K p``."""

    def __init__(self, model: SdeModel, grid: Grid1D):
        b, sigma = model.coefficients(grid)
        h = grid.h
        diff = 0.5 * sigma**2
        w = b / diff
        z = h * 0.5 * (w[:-1] + w[1:])
        left = bernoulli(-z) * diff[:-1] / h   # coefficient of p_i in F_{i+1/2}
        right = bernoulli(z) * diff[1:] / h    # coefficient of p_{i+1}
        if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
            raise SolverError("non-finite interface fluxes; drift too steep for the grid")
        self.lower = left.copy()     # K[i+1, i]
        self.upper = right.copy()    # K[i, i+1]
        self.diag = np.zeros(grid.n)
        self.diag[:-1] -= left
        self.diag[1:] -= right
        self.volume = np.full(grid.n, h)
        self.volume[0] = self.volume[-1] = 0.5 * h
        self._cache = {}

    def positivity_dt(self) -> float:
        """Largest step for which the explicit half of Crank-Nicolson keeps p >= 0."""
        return float(np.min(2.0 * self.volume / np.abs(self.diag)))

    def system(self, dt: float, theta: float):
        key = (dt, theta)
        if key not in self._cache:
            lhs_diag = self.volume - theta * dt * self.diag
            lhs_lower = -theta * dt * self.lower
            lhs_upper = -theta * dt * self.upper
            # column diagonal dominance keeps the unpivoted elimination stable
            offsum = np.zeros_like(lhs_diag)
            offsum[:-1] += np.abs(lhs_lower)
            offsum[1:] += np.abs(lhs_upper)
            if not np.all(lhs_diag > offsum):
                raise SolverError("implicit system is not diagonally dominant")
            rhs = ((1 - theta) * dt * self.lower,
                   self.volume + (1 - theta) * dt * self.diag,
                   (1 - theta) * dt * self.upper)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = ((lhs_lower, lhs_diag, lhs_upper), rhs)
        return self._cache[key]

    def step(self, p, dt, theta):
        lhs, rhs = self.system(dt, theta)
        b = self.volume * p if theta == 1.0 else tridiag_matvec(*rhs, p)
        return thomas(*lhs, b)


def _breakpoints(prob: FpProblem):
    points = set(prob.output_times)
    if prob.dt_late is not None and 0 < prob.t_switch < prob.t_end:
        points.add(prob.t_switch)
    return sorted(points)


def solve(prob: FpProblem) -> FpSolution:
    """March the density from the point mass at ``x0`` through every output time."""
    grid = prob.grid
    op = _Operator(prob.model, grid)
    k0 = grid.nearest_index(prob.x0)
    p = np.zeros(grid.n)
    p[k0] = 1.0 / op.volume[k0]
    mass = float(op.volume @ p)

    wanted = set(prob.output_times)
    out_times, out_densities = [], []
    t = 0.0
    theta = 1.0  # implicit Euler for the very first step only
    for target in _breakpoints(prob):
        while t < target:
            step = prob.step_at(t)
            remaining = target - t
            if remaining <= step * (1 + 1e-6):
                step = remaining
            p = op.step(p, step, theta)
            theta = 0.5
            t = target if step == remaining else t + step
            new_mass = float(op.volume @ p)
            if not np.isfinite(new_mass):
                raise SolverError(f"non-finite density at t = {t:g}")
            if abs(new_mass - mass) > MASS_STEP_TOL:
                raise SolverError(f"mass drifted by {new_mass - mass:.3g} at t = {t:g}")
            mass = new_mass
        if target in wanted:
            if not np.all(np.isfinite(p)):
                raise SolverError(f"non-finite density at t = {t:g}")
            low = p.min()
            if low < -NEGATIVE_TOL:
                raise SolverError(f"negative density {low:.3g} at t = {t:g}")
            out_times.append(target)
            out_densities.append(normalize(GridDensity(grid, np.maximum(p, 0.0))))
    check_tail_mass(out_densities[-1], label=f"Fokker-Planck density at t = {out_times[-1]:g}")
    return FpSolution(tuple(out_times), tuple(out_densities))
