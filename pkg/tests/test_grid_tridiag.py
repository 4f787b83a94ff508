import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fokkerlab import tridiag
from fokkerlab.errors import MisalignedGrid
from fokkerlab.grid import GridFunction, GridSpec, sample_at_lattice
from fokkerlab.rates import extend_initial


@pytest.mark.parametrize("N,r", [(1, 2), (2, 8), (37, 3), (400, 8)])
def test_grid_layout(N, r):
    g = GridSpec(N, r)
    x = g.nodes
    assert g.M == 2 * r * (N + 1) + 1
    assert x[0] == -0.5 / N
    assert abs(x[-1] - (1 + 0.5 / N)) <= 1e-14
    assert np.allclose(np.diff(x), g.dx, rtol=0, atol=1e-15)
    k = np.arange(N + 1)
    assert np.allclose(x[r * (2 * k + 1)], k / N, rtol=0, atol=1e-14)
    # half cells at the ends, total length 1 + 2h
    assert g.weights.sum() == pytest.approx(1 + 1 / N, abs=1e-13)


def test_sample_identity_field():
    g = GridSpec(2, 8)
    f = GridFunction(g, g.nodes)
    assert np.allclose(sample_at_lattice(f, 2), [0.0, 0.5, 1.0], atol=1e-15)


def test_sample_constant_and_u0(u0):
    g = GridSpec(5, 4)
    assert np.all(sample_at_lattice(GridFunction(g, np.full(g.M, 3.5)), 5) == 3.5)
    assert np.array_equal(sample_at_lattice(extend_initial(u0, 2), 2), [0.0, 1.875, 0.0])


def test_sample_misaligned():
    with pytest.raises(MisalignedGrid):
        sample_at_lattice(GridFunction(GridSpec(6, 4), np.zeros(GridSpec(6, 4).M)), 4)


def test_grid_function_read_only():
    f = GridFunction(GridSpec(3), np.ones(GridSpec(3).M))
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def _random_band(rng, n):
    sub = rng.uniform(-1, 1, n - 1)
    sup = rng.uniform(-1, 1, n - 1)
    diag = 3 + rng.uniform(0, 1, n)
    return sub, diag, sup


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**31))
def test_solvers_agree_with_dense(n, seed):
    rng = np.random.default_rng(seed)
    sub, diag, sup = _random_band(rng, n)
    rhs = rng.normal(size=n)
    dense = tridiag.to_dense(sub, diag, sup)
    ref = np.linalg.solve(dense, rhs)
    assert np.allclose(tridiag.thomas_solve(sub, diag, sup, rhs), ref, atol=1e-12)
    assert np.allclose(tridiag.solve(sub, diag, sup, rhs), ref, atol=1e-12)
    assert np.allclose(tridiag.Factorized(sub, diag, sup).solve(rhs), ref, atol=1e-12)
    assert np.allclose(tridiag.matvec(sub, diag, sup, rhs), dense @ rhs, atol=1e-13)
