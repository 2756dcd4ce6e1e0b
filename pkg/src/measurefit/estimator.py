"""Parameter and drift estimation by Hellinger matching of densities.

Two objectives are provided:

* stationary: ``F(theta) = H^2(p_theta, q)`` with the 1/2-normalized
  Hellinger distance, where ``p_theta`` is the stationary density;
* time-dependent: ``max_k int (sqrt q(., t_k) - sqrt p_theta(., t_k))^2 dx``
  over the observation times, *without* the 1/2 factor.  A positive factor
  cannot move the minimizer, so the two conventions fit the same parameter.

Both fits scan a fixed parameter grid and polish the best interior scan point
with golden-section search.  Inadmissible parameters (non-normalizable
density, solver failure) score ``inf`` instead of aborting the scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .density import (Grid1D, GridDensity, MASS_TOL, normalize, resample,
                      squared_hellinger)
from .errors import FitError, InputError, MeasureFitError
from .fokker_planck import FpSettings, solve
from .sde import ScalarFunctionSpec, SdeFamily, instantiate
from .stationary import StationarySpec, stationary_density

__all__ = [
    "Observation", "FitResult", "golden_section", "scan_grid",
    "stationary_objective", "time_objective", "fit_stationary", "fit_time",
    "recover_drift", "T_MIN",
]

T_MIN = 0.1
GOLDEN_TOL = 1e-6
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Observation:
    """Observed density (stationary) or density snapshots (time-dependent)."""

    kind: str
    densities: tuple[GridDensity, ...]
    times: tuple[float, ...] = ()
    source: str = ""

    def __post_init__(self):
        dens = tuple(self.densities)
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "times", times)
        if not dens:
            raise InputError("observation has no densities")
        grid = dens[0].grid
        for d in dens:
            if d.grid != grid:
                raise InputError("observed densities must share one grid")
            if abs(d.mass - 1.0) > MASS_TOL:
                raise InputError(f"observed density not normalized (mass {d.mass:.9g})")
        if self.kind == "stationary":
            if len(dens) != 1 or times:
                raise InputError("a stationary observation holds exactly one density")
        elif self.kind == "time_dependent":
            if len(times) != len(dens):
                raise InputError("one observation time per density required")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise InputError("observation times must be strictly increasing")
            if times[0] < T_MIN:
                raise InputError(f"observation times must be >= {T_MIN}, got {times[0]}")
        else:
            raise InputError(f"unknown observation kind {self.kind!r}")

    @classmethod
    def stationary(cls, density: GridDensity, source: str = "") -> "Observation":
        return cls("stationary", (normalize(density),), (), source)

    @classmethod
    def time_dependent(cls, times, densities, source: str = "") -> "Observation":
        return cls("time_dependent", tuple(normalize(d) for d in densities), tuple(times), source)

    @classmethod
    def from_function(cls, f: Callable, grid: Grid1D, times: Sequence[float] | None = None,
                      source: str = "") -> "Observation":
        """Sample ``f(x)`` (stationary) or ``f(x, t)`` at each of ``times``."""
        x = grid.nodes
        if times is None:
            return cls.stationary(GridDensity(grid, f(x)), source)
        return cls.time_dependent(times, [GridDensity(grid, f(x, t)) for t in times], source)

    @property
    def grid(self) -> Grid1D:
        return self.densities[0].grid

    @property
    def density(self) -> GridDensity:
        if self.kind != "stationary":
            raise InputError("time-dependent observation has no single density")
        return self.densities[0]

    def on_grid(self, grid: Grid1D) -> "Observation":
        if grid == self.grid:
            return self
        return Observation(self.kind, tuple(resample(d, grid) for d in self.densities),
                           self.times, self.source)

    def subset(self, times: Sequence[float]) -> "Observation":
        keep = [i for i, t in enumerate(self.times)
                if any(abs(t - s) <= 1e-9 * max(1.0, abs(s)) for s in times)]
        if len(keep) != len(times):
            raise InputError("requested times are not all observed")
        return Observation(self.kind, tuple(self.densities[i] for i in keep),
                           tuple(self.times[i] for i in keep), self.source)


@dataclass
class FitResult:
    theta_hat: float
    objective_value: float
    scan_trace: list[tuple[float, float]]
    refinement_iterations: int
    boundary_flag: bool = False
    # (bracket_lo, bracket_hi, best_theta, best_value) after each golden step
    refinement_trace: list[tuple[float, float, float, float]] = field(default_factory=list)

    def report(self) -> str:
        """``key = value`` lines, fixed formatting."""
        return (f"theta_hat = {self.theta_hat:.17g}\n"
                f"objective = {self.objective_value:.17g}\n"
                f"iterations = {self.refinement_iterations}\n"
                f"boundary_flag = {str(self.boundary_flag).lower()}\n")


# --------------------------------------------------------------------------
# objectives

def stationary_objective(family: SdeFamily, theta: float, obs: Observation,
                         grid: Grid1D | None = None) -> float:
    """H^2 between the stationary density at ``theta`` and the observation."""
    grid = grid or obs.grid
    q = obs.on_grid(grid).density
    try:
        model = instantiate(family, theta, grid)
        p = stationary_density(StationarySpec(model, grid))
    except MeasureFitError:
        return math.inf
    return squared_hellinger(p, q)


def time_objective(family: SdeFamily, theta: float, obs: Observation,
                   settings: FpSettings | None = None) -> float:
    """Worst-case (over observation times) unhalved squared Hellinger distance."""
    settings = settings or FpSettings(grid=obs.grid)
    obs = obs.on_grid(settings.grid)
    try:
        model = instantiate(family, theta, settings.grid)
        sol = solve(settings.problem(model, obs.times))
    except (MeasureFitError, ValueError):
        return math.inf
    return max(2.0 * squared_hellinger(q, p) for q, p in zip(obs.densities, sol.densities))


# --------------------------------------------------------------------------
# search

def scan_grid(lo: float, hi: float, step: float) -> list[float]:
    """``lo, lo + step, ...`` up to ``hi``; ``hi`` is always included."""
    if not step > 0:
        raise InputError("scan step must be positive")
    count = int(math.floor((hi - lo) / step + 1e-9))
    thetas = [round(lo + i * step, 12) for i in range(count + 1)]
    if hi - thetas[-1] > 1e-9 * max(1.0, abs(hi)):
        thetas.append(hi)
    return thetas


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = GOLDEN_TOL,
                   best: tuple[float, float] | None = None):
    """Minimize ``f`` on ``[a, b]`` until the bracket is no wider than ``tol``.

    ``best`` seeds the running minimum (e.g. the scan point that produced the
    bracket).  Returns ``(theta, value, iterations, trace)``; ``theta`` is the
    best point evaluated, earlier points winning ties.
    """
    best_x, best_f = best if best is not None else (None, math.inf)

    def consider(x, fx):
        nonlocal best_x, best_f
        if best_x is None or fx < best_f:
            best_x, best_f = x, fx

    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    consider(c, fc)
    consider(d, fd)
    trace = []
    iterations = 0
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
            consider(c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
            consider(d, fd)
        iterations += 1
        trace.append((a, b, best_x, best_f))
    return best_x, best_f, iterations, trace


def _fit(objective: Callable[[float], float], lo: float, hi: float, scan_step: float,
         map_fn=map) -> FitResult:
    thetas = scan_grid(lo, hi, scan_step)
    values = [float(v) for v in map_fn(objective, thetas)]
    trace = list(zip(thetas, values))
    if all(math.isinf(v) or math.isnan(v) for v in values):
        raise FitError(f"no admissible parameter in [{lo}, {hi}]")
    finite = [v if np.isfinite(v) else math.inf for v in values]
    k = int(np.argmin(finite))  # first-best wins
    if k == 0 or k == len(thetas) - 1:
        return FitResult(thetas[k], finite[k], trace, 0, boundary_flag=True)
    theta, value, iterations, refine = golden_section(
        objective, thetas[k - 1], thetas[k + 1], best=(thetas[k], finite[k]))
    return FitResult(theta, value, trace, iterations, False, refine)


def fit_stationary(family: SdeFamily, obs: Observation, grid: Grid1D | None = None,
                   scan_step: float = 0.1, map_fn=map) -> FitResult:
    """Fit the family parameter to a stationary observation.

    ``map_fn`` evaluates the scan (pass ``executor.map`` to parallelize).
    """
    grid = grid or obs.grid
    objective = partial(_stationary_at, family, obs.on_grid(grid), grid)
    return _fit(objective, *family.range, scan_step, map_fn)


def fit_time(family: SdeFamily, obs: Observation, settings: FpSettings | None = None,
             scan_step: float = 0.1, map_fn=map) -> FitResult:
    """Fit the family parameter to time-dependent density snapshots."""
    settings = settings or FpSettings(grid=obs.grid)
    objective = partial(_time_at, family, obs.on_grid(settings.grid), settings)
    return _fit(objective, *family.range, scan_step, map_fn)


# argument order suited to functools.partial; module level so they pickle
def _stationary_at(family, obs, grid, theta):
    return stationary_objective(family, theta, obs, grid)


def _time_at(family, obs, settings, theta):
    return time_objective(family, theta, obs, settings)


# --------------------------------------------------------------------------
# drift recovery

def recover_drift(obs: Observation | GridDensity, diffusion, grid: Grid1D | None = None) -> np.ndarray:
    """Drift whose stationary density is the observed one, for a given diffusion.

    Zero stationary flux gives ``b = (sigma^2 q)' / (2 q)``; the derivative uses
    central differences inside and one-sided differences at the end nodes.
    No smoothing is applied, so noisy observations should be smoothed first.
    """
    q = obs.density if isinstance(obs, Observation) else obs
    if grid is not None and grid != q.grid:
        q = resample(q, grid)
    grid = q.grid
    if not isinstance(diffusion, ScalarFunctionSpec):
        diffusion = ScalarFunctionSpec(diffusion)
    sigma = diffusion.on_grid(grid, "diffusion")
    qv = q.values
    interior = qv[1:-1]
    if np.any(interior <= 0):
        k = 1 + int(np.argmax(interior <= 0))
        raise InputError(f"observed density vanishes at interior node x = {grid.nodes[k]:g}")
    flux = np.gradient(sigma**2 * qv, grid.h, edge_order=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return flux / (2.0 * qv)
