"""Stationary densities from the closed-form steady Fokker-Planck solution.

For ``dX = b dt + sigma dB`` in one dimension the zero-flux steady state is

    p(x) = C / sigma(x)^2 * exp(Psi(x)),   Psi(x) = int_{x*}^{x} 2 b(y) / sigma(y)^2 dy,

with ``C`` fixed by unit mass.  ``Psi`` is a cumulative trapezoid integral on
the output grid, which makes this density the exact discrete steady state of
the solver in :mod:`measurefit.fokker_planck`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import (Grid1D, GridDensity, TAIL_FRACTION, check_tail_mass,
                      cumulative_trapezoid, normalize, tail_mass_fraction)
from .errors import GridError, ModelError, NonIntegrableError
from .sde import SdeModel

__all__ = ["StationarySpec", "potential", "stationary_density", "stationary_flux"]

# Share of mass in the outer grid strips beyond which the density is treated as
# non-normalizable rather than merely truncated.  Must admit Cauchy-type tails.
MAX_TAIL_FRACTION = 0.01


@dataclass(frozen=True)
class StationarySpec:
    model: SdeModel
    grid: Grid1D
    xstar: float | None = None

    def __post_init__(self):
        if self.xstar is None:
            k = self.grid.nearest_index(0.0)
        else:
            k = self.grid.index_of(self.xstar)
        object.__setattr__(self, "xstar", float(self.grid.nodes[k]))

    @property
    def xstar_index(self) -> int:
        return self.grid.index_of(self.xstar)


def potential(spec: StationarySpec) -> np.ndarray:
    """Psi at every node, zero at ``xstar``."""
    b, sigma = spec.model.coefficients(spec.grid)
    integrand = 2.0 * b / sigma**2
    if not np.all(np.isfinite(integrand)):
        raise ModelError("2 b / sigma^2 is not finite on the grid")
    k = spec.xstar_index
    psi = cumulative_trapezoid(integrand, spec.grid, start=k)
    psi[k] = 0.0
    return psi


def stationary_density(spec: StationarySpec) -> GridDensity:
    """Normalized stationary density of ``spec.model`` on ``spec.grid``."""
    _, sigma = spec.model.coefficients(spec.grid)
    log_p = potential(spec) - np.log(sigma**2)
    log_p -= log_p.max()
    values = np.exp(log_p)
    raw = GridDensity(spec.grid, values)
    if not np.isfinite(raw.mass) or raw.mass <= 0:
        raise NonIntegrableError("stationary density has no finite positive mass")
    frac = tail_mass_fraction(raw)
    if frac > MAX_TAIL_FRACTION:
        raise NonIntegrableError(
            f"domain too small or density non-normalizable: {frac:.3g} of the mass "
            f"in the outer {TAIL_FRACTION:.0%} of the grid")
    p = normalize(raw)
    check_tail_mass(p, label="stationary density")
    return p


def stationary_flux(model: SdeModel, density: GridDensity) -> np.ndarray:
    """Probability flux ``J = b p - 1/2 (sigma^2 p)'`` on interior nodes.

    A true stationary density makes this vanish; used as a residual check.
    """
    if density.grid.n < 3:
        raise GridError("need at least 3 nodes")
    b, sigma = model.coefficients(density.grid)
    p = density.values
    s2p = sigma**2 * p
    deriv = (s2p[2:] - s2p[:-2]) / (2.0 * density.grid.h)
    return b[1:-1] * p[1:-1] - 0.5 * deriv
