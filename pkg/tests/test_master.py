import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import binom

from fokkerlab.errors import LengthMismatch, NTooSmall, Reducible, ZeroMass
from fokkerlab.grid import GridFunction, GridSpec
from fokkerlab.master import (
    TridiagonalGenerator,
    build_generator,
    initial_pair,
    normalize_initial,
    solve_master,
    stationary_distribution,
)
from fokkerlab.rates import BUILTIN_MODELS, extend_initial


def test_ehrenfest_n2_bands(ehrenfest):
    g = build_generator(ehrenfest, 2)
    assert np.array_equal(g.sub, [2.0, 1.0])
    assert np.array_equal(g.sup, [1.0, 2.0])
    assert np.array_equal(g.diag, [-2.0, -2.0, -2.0])


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
@pytest.mark.parametrize("N", [7, 50, 333])
def test_column_sums_zero(name, N):
    g = build_generator(BUILTIN_MODELS[name], N)
    assert np.max(np.abs(g.column_sums())) <= 1e-12 * N
    assert np.all(g.sub >= 0) and np.all(g.sup >= 0)


def test_n_below_n0(ehrenfest):
    with pytest.raises(NTooSmall):
        build_generator(ehrenfest, 6, enforce_n0=True)
    build_generator(ehrenfest, 7, enforce_n0=True)


def test_normalize_examples(u0):
    p0, QN = normalize_initial(extend_initial(u0, 2), 2)
    assert QN == 1.875 and np.array_equal(p0, [0.0, 1.0, 0.0])
    g = GridSpec(4)
    p0, QN = normalize_initial(GridFunction(g, np.ones(g.M)), 4)
    assert np.allclose(p0, 0.2) and QN == 5.0
    with pytest.raises(ZeroMass):
        normalize_initial(GridFunction(g, np.zeros(g.M)), 4)


def test_initial_pair_matches_lattice(u0):
    for N in (10, 77, 400):
        p0, v0, QN = initial_pair(extend_initial(u0, N), N)
        assert np.array_equal(v0.values[v0.grid.lattice_indices], p0)
        assert abs(p0.sum() - 1) <= 1e-15


def test_stationary_is_fixed_point(ehrenfest):
    g = build_generator(ehrenfest, 40)
    pi = stationary_distribution(g)
    traj = solve_master(g, pi, np.linspace(0, 3, 7))
    assert np.max(np.abs(traj.states - pi)) <= 1e-9
    assert np.max(np.abs(g.apply(pi))) <= 1e-10 * 40


def test_relaxation_n2(ehrenfest):
    traj = solve_master(build_generator(ehrenfest, 2), [1.0, 0.0, 0.0], [0.0, 20.0])
    assert np.allclose(traj.states[-1], [0.25, 0.5, 0.25], atol=1e-8, rtol=0)


@pytest.mark.parametrize("N", [2, 50, 400])
def test_stationary_binomial(ehrenfest, N):
    pi = stationary_distribution(build_generator(ehrenfest, N))
    assert 0.5 * np.abs(pi - binom.pmf(np.arange(N + 1), N, 0.5)).sum() <= 1e-10


def test_stationary_two_state():
    g = TridiagonalGenerator.from_rates([3.0, 0.0], [0.0, 3.0])
    assert np.allclose(stationary_distribution(g), [0.5, 0.5])


def test_reducible():
    g = TridiagonalGenerator.from_rates([1.0, 0.0, 0.0], [0.0, 1.0, 1.0])
    with pytest.raises(Reducible):
        stationary_distribution(g)


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
def test_conservation_and_positivity(name, rng):
    g = build_generator(BUILTIN_MODELS[name], 60)
    p0 = rng.dirichlet(np.ones(61) * 0.3)
    traj = solve_master(g, p0, np.linspace(0, 2, 21))
    assert np.max(np.abs(traj.totals() - 1)) <= 1e-9
    assert traj.states.min() >= -1e-10


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_matches_expm(name, N, rng):
    g = build_generator(BUILTIN_MODELS[name], N)
    p0 = rng.dirichlet(np.ones(N + 1))
    times = np.linspace(0, 2, 9)
    traj = solve_master(g, p0, times)
    dense = g.dense()
    for t, p in zip(times, traj.states):
        assert np.max(np.abs(p - expm(t * dense) @ p0)) <= 1e-8


def test_point_mass_matches_expm(ehrenfest):
    g = build_generator(ehrenfest, 6)
    p0 = np.eye(7)[0]
    traj = solve_master(g, p0, [0.0, 0.01, 0.5, 1.0])
    ref = np.array([expm(t * g.dense()) @ p0 for t in traj.times])
    assert np.max(np.abs(traj.states - ref)) <= 1e-8


def test_matrix_initial_columns(ehrenfest):
    g = build_generator(ehrenfest, 10)
    P0 = np.eye(11)[:, :3]
    both = solve_master(g, P0, [0.0, 1.0])
    one = solve_master(g, P0[:, 1], [0.0, 1.0])
    assert np.allclose(both.states[-1][:, 1], one.states[-1], atol=1e-12)


def test_length_mismatch(ehrenfest):
    with pytest.raises(LengthMismatch):
        solve_master(build_generator(ehrenfest, 5), np.ones(4), [0.0, 1.0])
