import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from measurefit.density import Grid1D, GridDensity, normalize
from measurefit.errors import GridError, NonIntegrableError
from measurefit.sde import SdeModel
from measurefit.stationary import (StationarySpec, potential, stationary_density,
                                   stationary_flux)

G8 = Grid1D(-8, 8, 2001)


def test_potential_langevin():
    psi = potential(StationarySpec(SdeModel("-x", "1"), G8))
    assert psi[1000] == 0.0
    assert np.max(np.abs(psi + G8.nodes**2)) <= 1e-6


def test_potential_zero_drift():
    assert np.all(potential(StationarySpec(SdeModel("0", "1"), G8)) == 0.0)


def test_potential_cauchy_drift():
    # trapezoid error is h^2/12 * |f'(8) - f'(0)| ~ 2.7e-6 at this spacing
    g = Grid1D(-8, 8, 4001)
    psi = potential(StationarySpec(SdeModel("-x/(1+x^2)", "1"), g))
    assert np.max(np.abs(psi + np.log1p(g.nodes**2))) <= 1e-5


def test_xstar_must_be_a_node():
    with pytest.raises(GridError):
        StationarySpec(SdeModel("-x", "1"), G8, xstar=0.0031)


def test_langevin_density():
    g = Grid1D(-40, 40, 4001)
    p = stationary_density(StationarySpec(SdeModel("-x", "1"), g))
    exact = np.exp(-g.nodes**2) / math.sqrt(math.pi)
    assert np.max(np.abs(p.values - exact)) <= 1e-6


def test_cauchy_density():
    g = Grid1D(-40, 40, 8001)
    p = stationary_density(StationarySpec(SdeModel("-x/(1+x^2)", "1"), g))
    # the oracle is the Cauchy law restricted to the grid and renormalized there
    q = normalize(GridDensity(g, 1 / (math.pi * (1 + g.nodes**2))))
    assert np.max(np.abs(p.values - q.values)) <= 1e-4


def test_variable_diffusion_matches_closed_form():
    # b = -x, sigma^2 = 1 + x^2: p ~ exp(int -2x/(1+x^2)) / (1+x^2) = (1+x^2)^-2
    g = Grid1D(-40, 40, 8001)
    p = stationary_density(StationarySpec(SdeModel("-x", "sqrt(1+x^2)"), g))
    q = normalize(GridDensity(g, (1 + g.nodes**2) ** -2.0))
    assert np.max(np.abs(p.values - q.values)) <= 1e-5


def test_non_integrable():
    with pytest.raises(NonIntegrableError, match="non-normalizable"):
        stationary_density(StationarySpec(SdeModel("x", "1"), Grid1D(-40, 40, 4001)))
    with pytest.raises(NonIntegrableError):
        stationary_density(StationarySpec(SdeModel("-1", "1"), Grid1D(-40, 40, 4001)))


def test_steep_potential_does_not_overflow():
    p = stationary_density(StationarySpec(SdeModel("-50*x^3", "1"), Grid1D(-40, 40, 4001)))
    assert abs(p.mass - 1) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2000), st.integers(0, 2000))
def test_xstar_invariance(i, j):
    model = SdeModel("-x - 0.3*sin(3*x)", "sqrt(1 + 0.5*cos(x)^2)")
    a = stationary_density(StationarySpec(model, G8, xstar=G8.nodes[i]))
    b = stationary_density(StationarySpec(model, G8, xstar=G8.nodes[j]))
    assert np.max(np.abs(a.values - b.values)) <= 1e-10


@pytest.mark.parametrize("drift, diffusion, grid", [
    ("-x", "1", Grid1D(-40, 40, 4001)),
    ("-2.5*x", "1", Grid1D(-40, 40, 4001)),
    ("-x/(1+x^2)", "1", Grid1D(-40, 40, 8001)),
    ("-x - 0.3*sin(3*x)", "sqrt(1 + 0.5*cos(x)^2)", Grid1D(-10, 10, 4001)),
    ("-x^3 + x", "sqrt(2)", Grid1D(-10, 10, 4001)),
])
def test_zero_flux_residual(drift, diffusion, grid):
    model = SdeModel(drift, diffusion)
    p = stationary_density(StationarySpec(model, grid))
    assert np.max(np.abs(stationary_flux(model, p))) <= 1e-3 * p.values.max()
