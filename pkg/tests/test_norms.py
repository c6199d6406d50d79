import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from magnetoconv import norms
from magnetoconv.grid import make_grid


def test_integrate_exact_on_linear_profiles(grid):
    _, Y = grid.mesh
    assert np.isclose(norms.integrate(grid, np.ones(grid.shape)), grid.L)
    assert np.isclose(norms.integrate(grid, Y), grid.L / 2, rtol=1e-14)


def test_l2_of_fourier_mode(grid):
    X, _ = grid.mesh
    f = np.sin(2 * np.pi * X / grid.L)
    assert np.isclose(norms.norm(grid, f), np.sqrt(grid.L / 2), rtol=1e-13)


def test_l4_and_linf_of_constant(grid):
    c = 1.7 * np.ones(grid.shape)
    assert np.isclose(norms.norm(grid, c, "L4"), (grid.L * 1.7**4) ** 0.25)
    assert norms.norm(grid, -c, "Linf") == 1.7


def test_vector_l4_uses_pointwise_magnitude(grid):
    v = np.stack([3 * np.ones(grid.shape), 4 * np.ones(grid.shape)])
    assert np.isclose(norms.norm(grid, v, "L4"), (grid.L * 5.0**4) ** 0.25)


def test_unknown_norm(grid):
    with pytest.raises(ValueError):
        norms.norm(grid, grid.zeros(), "H3")


def test_h2_splits_into_l2_and_grad_h1(grid):
    f = np.random.default_rng(0).standard_normal((2,) + grid.shape)
    lhs = norms.norm(grid, f, "H2") ** 2
    rhs = norms.norm(grid, f) ** 2 + norms.grad_h1(grid, f) ** 2
    assert np.isclose(lhs, rhs, rtol=1e-13)
    assert np.isclose(norms.norm(grid, f, "H1") ** 2, norms.norm(grid, f) ** 2 + norms.grad_l2(grid, f) ** 2)


@settings(max_examples=30, deadline=None)
@given(arrays(float, (8, 9), elements=st.floats(-5, 5, allow_nan=False)))
def test_sobolev_norms_are_ordered(f):
    g = make_grid(8, 9)
    l2, h1, h2 = (norms.norm(g, f, k) for k in ("L2", "H1", "H2"))
    assert l2 <= h1 * (1 + 1e-12) and h1 <= h2 * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(float, (8, 9), elements=st.floats(-5, 5, allow_nan=False)), st.floats(-3, 3))
def test_norms_are_homogeneous(f, a):
    g = make_grid(8, 9)
    for kind in ("L2", "H1", "H2", "L4", "Linf"):
        assert np.isclose(norms.norm(g, a * f, kind), abs(a) * norms.norm(g, f, kind), rtol=1e-10, atol=1e-12)
