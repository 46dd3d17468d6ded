"""Grid construction, states, interpolation, and serialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltzlab.grid import (
    ClassYBounds,
    GridFunction,
    VelocityGrid,
    interpolate,
    load_grid_function,
    make_maxwellian,
    save_grid_function,
    state_data,
    weight,
)


def test_grid_basic_geometry():
    g = VelocityGrid(d=3, R=8.0, N=32)
    assert g.h * g.N == 2.0 * g.R
    ax = g.axis()
    assert len(ax) == 32
    # cell-centered and symmetric: no node at 0, axis is its own negation
    assert 0.0 not in ax
    np.testing.assert_allclose(ax, -ax[::-1], atol=0)
    assert g.n_nodes == 32**3
    assert g.cell_volume == g.h**3
    assert g.meta() == {"d": 3, "N": 32, "R": 8.0}


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(d=1, R=8.0, N=32),
        dict(d=4, R=8.0, N=32),
        dict(d=3, R=0.0, N=32),
        dict(d=3, R=8.0, N=31),
        dict(d=3, R=8.0, N=0),
    ],
)
def test_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        VelocityGrid(**kwargs)


def test_grid_function_requires_finite_values():
    g = VelocityGrid(d=2, R=4.0, N=8)
    bad = np.zeros(g.shape)
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        GridFunction(g, bad)


def test_grid_function_nonneg_flag_is_verified():
    g = VelocityGrid(d=2, R=4.0, N=8)
    vals = np.ones(g.shape)
    vals[3, 3] = -1.0
    f = GridFunction(g, vals, nonneg=True)
    assert not f.nonneg


def test_maxwellian_mass_and_energy():
    g = VelocityGrid(d=3, R=8.0, N=32)
    M = make_maxwellian(g, 1.0, 0.0, 1.0)
    m0, m2, ent = state_data(M)
    assert abs(m0 - 1.0) < 1e-12
    assert abs(m2 - 4.0) < 1e-12
    # differential entropy of the unit Gaussian, sign flipped for f log f
    assert abs(ent - (-1.5 * math.log(2.0 * math.pi) - 1.5)) < 1e-10


def test_maxwellian_zero_mass_and_gates():
    g = VelocityGrid(d=2, R=4.0, N=16)
    z = make_maxwellian(g, 0.0, 0.0, 1.0)
    assert not z.values.any()
    assert z.nonneg
    with pytest.raises(ValueError):
        make_maxwellian(g, -1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        make_maxwellian(g, 1.0, 0.0, 0.0)


def test_maxwellian_quadrature_error_drops_fast_under_refinement():
    # T = 0.05 is under-resolved at N=16, R=4; the aliasing error must fall
    # by far more than the factor 4 of a second-order rule when N doubles
    errs = []
    for N in (16, 32):
        g = VelocityGrid(d=2, R=4.0, N=N)
        M = make_maxwellian(g, 1.0, 0.0, 0.05)
        errs.append(abs(M.integrate() - 1.0))
    assert errs[0] > 4.0 * errs[1]


def test_weight_values_and_identity():
    g = VelocityGrid(d=3, R=4.0, N=4)  # h=2, axis {-3,-1,1,3}
    w0 = weight(g, 0.0)
    assert (w0.values == 1.0).all()
    w2 = weight(g, 2.0)
    assert w2.values[2, 2, 2] == 4.0  # node (1,1,1): 1 + |v|^2 = 4
    k1, k2 = 1.7, -0.9
    prod = weight(g, k1).values * weight(g, k2).values
    np.testing.assert_allclose(prod, weight(g, k1 + k2).values, rtol=1e-14)


def test_interpolate_reproduces_nodes_and_constants():
    g = VelocityGrid(d=2, R=4.0, N=8)
    rng = np.random.default_rng(7)
    f = GridFunction(g, rng.random(g.shape))
    nodes = g.nodes()
    vals = interpolate(f, nodes)
    np.testing.assert_allclose(vals, f.values.ravel(), rtol=1e-14)
    c = GridFunction(g, np.full(g.shape, 2.5))
    assert interpolate(c, np.array([0.3, -1.2])) == pytest.approx(2.5, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    coeffs=st.tuples(
        st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3)
    ),
    pt=st.tuples(st.floats(-3.4, 3.4), st.floats(-3.4, 3.4)),
)
def test_interpolate_exact_on_affine_functions(coeffs, pt):
    # multilinear interpolation reproduces affine functions inside the hull
    g = VelocityGrid(d=2, R=4.0, N=8)
    a, bx, by = coeffs
    X, Y = g.coords()
    f = GridFunction(g, a + bx * X + by * Y)
    x, y = pt
    expected = a + bx * x + by * y
    assert interpolate(f, np.array(pt)) == pytest.approx(expected, abs=1e-10)


def test_interpolate_zero_outside_box():
    g = VelocityGrid(d=2, R=4.0, N=8)
    f = GridFunction(g, np.ones(g.shape))
    assert interpolate(f, np.array([5.0, 0.0])) == 0.0
    assert interpolate(f, np.array([0.0, -4.6])) == 0.0
    # beyond the node hull but inside the box: linear falloff, not a jump
    edge = interpolate(f, np.array([3.9, 0.1]))
    assert 0.0 < edge < 1.0


def test_class_y_membership():
    g = VelocityGrid(d=3, R=8.0, N=24)
    M = make_maxwellian(g, 1.0, 0.0, 1.0)
    bounds = ClassYBounds(rho=0.5, E=10.0, H=10.0)
    assert bounds.contains(M)
    thin = make_maxwellian(g, 0.1, 0.0, 1.0)  # mass below rho
    assert not bounds.contains(thin)
    rep = bounds.report(M)
    assert rep["mass"] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ClassYBounds(rho=0.0, E=10.0, H=10.0)


@pytest.mark.parametrize("fmt", ["binary", "csv"])
def test_grid_function_roundtrip(tmp_path, fmt):
    g = VelocityGrid(d=2, R=4.0, N=8)
    rng = np.random.default_rng(3)
    f = GridFunction(g, rng.standard_normal(g.shape))
    path = tmp_path / f"state.{fmt}"
    save_grid_function(f, path, fmt=fmt)
    back = load_grid_function(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)
