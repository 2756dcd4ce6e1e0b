import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from measurefit import csvio
from measurefit.density import (Grid1D, GridDensity, TailMassWarning, check_tail_mass,
                                cumulative_trapezoid, hellinger, normalize, resample,
                                squared_hellinger, tail_mass_fraction, trapezoid)
from measurefit.errors import GridError, InputError, NumericalError

from conftest import gaussian


def test_grid_nodes():
    g = Grid1D(0.0, 1.0, 11)
    assert g.h == pytest.approx(0.1)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
    assert g.index_of(0.3) == 3
    with pytest.raises(GridError):
        g.index_of(0.35)


@pytest.mark.parametrize("lo, hi, n", [(1, 0, 5), (0, 0, 5), (0, 1, 2), (0, math.inf, 5)])
def test_bad_grids(lo, hi, n):
    with pytest.raises(GridError):
        Grid1D(lo, hi, n)


def test_trapezoid_exact_cases():
    g = Grid1D(0.0, 1.0, 11)
    assert trapezoid(np.ones(11), g) == pytest.approx(1.0, abs=1e-15)
    assert trapezoid(g.nodes, g) == pytest.approx(0.5, abs=1e-15)


def test_trapezoid_quadratic_against_analytic_integral():
    g = Grid1D(0.0, 1.0, 1001)
    assert abs(trapezoid(g.nodes**2, g) - 1 / 3) <= 1e-6


def test_trapezoid_length_mismatch():
    with pytest.raises(GridError):
        trapezoid(np.ones(5), Grid1D(0, 1, 11))


def test_cumulative_trapezoid_anchor():
    g = Grid1D(-2.0, 2.0, 401)
    cum = cumulative_trapezoid(2 * g.nodes, g, start=200)
    assert cum[200] == 0.0
    np.testing.assert_allclose(cum, g.nodes**2, atol=1e-12)


def test_normalize_constant():
    d = normalize(GridDensity(Grid1D(0, 1, 11), np.full(11, 2.0)))
    np.testing.assert_allclose(d.values, 1.0, rtol=1e-15)


def test_normalize_gaussian_peak():
    g = Grid1D(-8.0, 8.0, 2001)
    d = normalize(GridDensity(g, np.exp(-g.nodes**2)))
    assert abs(d.mass - 1) <= 1e-12
    assert abs(d.values[1000] - 1 / math.sqrt(math.pi)) <= 1e-6


def test_normalize_rejects_zero_mass():
    with pytest.raises(NumericalError):
        normalize(GridDensity(Grid1D(0, 1, 11), np.zeros(11)))


@pytest.mark.parametrize("values", [[1.0, -0.1, 1.0], [1.0, math.nan, 1.0], [1.0, math.inf, 1.0]])
def test_density_rejects_invalid_values(values):
    with pytest.raises(NumericalError):
        GridDensity(Grid1D(0, 1, 3), values)


def test_density_is_immutable():
    d = GridDensity(Grid1D(0, 1, 3), [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        d.values[0] = 3.0
    with pytest.raises(AttributeError):
        d.values = np.zeros(3)


def test_hellinger_identity_and_disjoint():
    g = Grid1D(0.0, 10.0, 1001)
    x = g.nodes
    p = normalize(GridDensity(g, np.where(x < 4, 1.0, 0.0)))
    q = normalize(GridDensity(g, np.where(x > 6, 1.0, 0.0)))
    assert hellinger(p, p) == 0.0
    assert hellinger(p, q) == pytest.approx(1.0, abs=1e-12)


def test_hellinger_gaussians_against_bhattacharyya():
    g = Grid1D(-40.0, 40.0, 4001)
    p = GridDensity.from_function(g, lambda x: gaussian(x, 0.5))
    q = GridDensity.from_function(g, lambda x: gaussian(x, 0.125))
    s1, s2 = math.sqrt(0.5), math.sqrt(0.125)
    bc = math.sqrt(2 * s1 * s2 / (s1**2 + s2**2))
    assert abs(hellinger(p, q) - math.sqrt(1 - bc)) <= 1e-4
    assert abs(hellinger(p, q) - 0.324920) <= 1e-4


def test_hellinger_requires_same_grid_and_normalization():
    p = GridDensity.from_function(Grid1D(-5, 5, 101), lambda x: gaussian(x, 1))
    q = GridDensity.from_function(Grid1D(-5, 5, 201), lambda x: gaussian(x, 1))
    with pytest.raises(GridError):
        hellinger(p, q)
    with pytest.raises(NumericalError):
        hellinger(p, GridDensity(p.grid, 2 * p.values))


def test_resample_identity_and_linear():
    g = Grid1D(0.0, 1.0, 11)
    d = normalize(GridDensity(g, 1 + g.nodes))
    np.testing.assert_array_equal(resample(d, g).values, d.values)
    fine = Grid1D(0.0, 1.0, 101)
    r = resample(d, fine)
    np.testing.assert_allclose(r.values, (1 + fine.nodes) / 1.5, rtol=1e-12)


def test_resample_gaussian_refinement():
    coarse, fine = Grid1D(-10, 10, 501), Grid1D(-10, 10, 2001)
    f = lambda x: gaussian(x, 1.0)
    r = resample(GridDensity.from_function(coarse, f), fine)
    assert hellinger(GridDensity.from_function(fine, f), r) <= 1e-3


def test_resample_rejects_wider_target():
    d = GridDensity.from_function(Grid1D(-5, 5, 101), lambda x: gaussian(x, 1))
    with pytest.raises(GridError):
        resample(d, Grid1D(-6, 5, 101))


def test_tail_guard():
    g = Grid1D(-40, 40, 4001)
    narrow = GridDensity.from_function(g, lambda x: gaussian(x, 1))
    assert tail_mass_fraction(narrow) < 1e-100
    assert check_tail_mass(narrow) < 1e-8
    cauchy = GridDensity.from_function(g, lambda x: 1 / (1 + x**2))
    with pytest.warns(TailMassWarning):
        frac = check_tail_mass(cauchy)
    assert frac == pytest.approx((math.atan(40) - math.atan(36)) / math.atan(40), rel=1e-3)


# -- properties ----------------------------------------------------------------

PROP_GRID = Grid1D(-1.0, 1.0, 33)
positive = arrays(np.float64, PROP_GRID.n, elements=st.floats(0.0, 10.0)).filter(
    lambda v: trapezoid(v, PROP_GRID) > 1e-6)


def _dens(v):
    return normalize(GridDensity(PROP_GRID, v))


@settings(max_examples=200)
@given(positive, positive, positive)
def test_metric_axioms(a, b, c):
    p, q, r = _dens(a), _dens(b), _dens(c)
    assert hellinger(p, q) == hellinger(q, p)
    assert hellinger(p, p) == 0.0
    assert hellinger(p, r) <= hellinger(p, q) + hellinger(q, r) + 1e-10
    assert 0.0 <= hellinger(p, q) <= 1.0
    assert squared_hellinger(p, q) == pytest.approx(hellinger(p, q) ** 2, abs=1e-15)


@given(positive)
def test_normalize_idempotent(a):
    once = _dens(a)
    twice = normalize(once)
    np.testing.assert_allclose(twice.values, once.values, rtol=1e-12, atol=0)


# -- CSV -----------------------------------------------------------------------

def test_density_csv_round_trip(tmp_path):
    d = GridDensity.from_function(Grid1D(-3, 3, 61), lambda x: gaussian(x, 0.7))
    path = tmp_path / "d.csv"
    csvio.write_density_csv(path, d)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,value" and len(lines) == 62
    back = csvio.read_density_csv(path)
    assert back.grid == d.grid
    np.testing.assert_array_equal(back.values, d.values)


def test_time_csv_round_trip(tmp_path):
    g = Grid1D(-3, 3, 31)
    ds = [GridDensity.from_function(g, lambda x, v=v: gaussian(x, v)) for v in (0.5, 1.0)]
    path = tmp_path / "t.csv"
    csvio.write_time_csv(path, [0.5, 1.0], ds)
    times, back = csvio.read_time_csv(path)
    assert times == [0.5, 1.0]
    for a, b in zip(ds, back):
        np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.parametrize("body, message", [
    ("x,value\n0,1\n1,1\n3,1\n", "uniformly"),
    ("x,value\n0,1\n2,1\n1,1\n", "increasing"),
    ("x,val\n0,1\n1,1\n2,1\n", "header"),
    ("x,value\n0,1\n1,abc\n2,1\n", "not a number"),
    ("x,value\n0,1\n1,-1\n2,1\n", "negative"),
])
def test_density_csv_validation(tmp_path, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(InputError, match=message):
        csvio.read_density_csv(path)


def test_density_pickles():
    import pickle
    grid = Grid1D(-5, 5, 51)
    d = normalize(GridDensity(grid, np.exp(-grid.nodes**2)))
    e = pickle.loads(pickle.dumps(d))
    assert e.grid == grid and np.array_equal(e.values, d.values) and not e.values.flags.writeable
