import numpy as np
import pytest
from scipy.stats import binom

from fokkerlab.convergence import output_times
from fokkerlab.diagnostics import derivative
from fokkerlab.errors import NTooSmall, RefinementTooSmall, RichardsonFailed, ValidationError
from fokkerlab.fitting import fit_order
from fokkerlab.fpde import (
    discrete_stationary,
    discretize_fp,
    fp_stationary,
    solve_fp,
    zero_flux_recurrence,
)
from fokkerlab.grid import GridFunction, GridSpec
from fokkerlab.master import initial_pair
from fokkerlab.rates import BUILTIN_MODELS, RateModel, extend_initial


def _ehrenfest_steady(grid):
    x = grid.nodes
    u = np.exp(2 * grid.N * (x - x * x))
    return u / np.dot(grid.weights, u)


def test_guards(ehrenfest):
    with pytest.raises(RefinementTooSmall):
        discretize_fp(ehrenfest, 20, r=1)
    with pytest.raises(NTooSmall):
        discretize_fp(ehrenfest, 6)


def test_zero_field(ehrenfest):
    d = discretize_fp(ehrenfest, 20)
    assert np.all(d.apply(np.zeros(d.grid.M)) == 0)


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
def test_operator_conserves_mass(name, rng):
    d = discretize_fp(BUILTIN_MODELS[name], 30, 4)
    for _ in range(5):
        w = rng.uniform(0, 1, d.grid.M)
        Lw = d.apply(w)
        assert abs(np.dot(d.grid.weights, Lw)) <= 1e-13 * np.dot(d.grid.weights, np.abs(Lw))


def test_cell_peclet(ehrenfest):
    # |A - C| / (A + C) exceeds 1 slightly on the strips outside [0, 1]
    for r in (2, 8, 16):
        d = discretize_fp(ehrenfest, 20, r)
        assert d.max_cell_peclet() <= (1 + 2 * d.grid.h) / r + 1e-12


def test_steady_state_residual_orders(ehrenfest):
    rs = (4, 8, 16, 32)
    interior, ends = [], []
    for r in rs:
        d = discretize_fp(ehrenfest, 20, r)
        Lu = d.apply(_ehrenfest_steady(d.grid))
        interior.append(np.max(np.abs(Lu[1:-1])))
        ends.append(max(abs(Lu[0]), abs(Lu[-1])))
    dx = [1 / (40 * r) for r in rs]
    assert fit_order(list(zip(dx, interior)))[0] == pytest.approx(2.0, abs=0.05)
    assert fit_order(list(zip(dx, ends)))[0] == pytest.approx(1.0, abs=0.1)


def test_analytic_steady_state_ehrenfest(ehrenfest):
    g = GridSpec(30, 8)
    u = fp_stationary(ehrenfest, 30, g)
    assert np.allclose(u.values, _ehrenfest_steady(g), rtol=1e-10, atol=0)
    assert g.nodes[np.argmax(u.values)] == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
def test_analytic_steady_state_zero_flux(name):
    # ((A+C) u)' / 2N - (A-C) u = 0, with 5-point derivatives on a fine grid
    model = BUILTIN_MODELS[name]
    N = 10
    g = GridSpec(N, 64)
    u = fp_stationary(model, N, g).values
    x = g.nodes
    flux = derivative((model.A(x) + model.C(x)) * u, g.dx, 1) / (2 * N) - (model.A(x) - model.C(x)) * u
    assert np.max(np.abs(flux)) <= 1e-8 * np.max(u)


def test_symmetric_model_steady_state():
    # A(z) = C(1 - z) with A = (1 - z)(1 + z)
    model = RateModel((1.0, 0.0, -1.0), (0.0, 2.0, -1.0), 0.1, "sym")
    u = fp_stationary(model, 25).values
    assert np.max(np.abs(u - u[::-1])) <= 1e-10 * u.max()


@pytest.mark.parametrize("N", [50, 400])
def test_discrete_steady_state_oracles(ehrenfest, N):
    d = discretize_fp(ehrenfest, N)
    w = discrete_stationary(d).values
    rec = zero_flux_recurrence(d).values
    assert np.max(np.abs(w - rec)) <= 1e-8 * rec.max()
    ana = fp_stationary(ehrenfest, N, d.grid).values
    assert np.max(np.abs(w - ana)) <= 1e-3 * ana.max()
    lat = w[d.grid.lattice_indices]
    lat = lat / lat.sum()
    assert 0.5 * np.abs(lat - binom.pmf(np.arange(N + 1), N, 0.5)).sum() <= 5 / N


def test_zero_initial_stays_zero(ehrenfest):
    d = discretize_fp(ehrenfest, 20)
    traj = solve_fp(d, GridFunction(d.grid, np.zeros(d.grid.M)), output_times(0.5))
    assert np.all(traj.fields == 0)


def test_stationary_start_constant(ehrenfest):
    d = discretize_fp(ehrenfest, 40)
    w = discrete_stationary(d)
    traj = solve_fp(d, w, output_times(1.0))
    assert np.max(np.abs(traj.fields - w.values)) <= 1e-8 * w.values.max()


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
def test_mass_and_positivity(name, u0):
    model = BUILTIN_MODELS[name]
    N = 60
    d = discretize_fp(model, N)
    _, v0, _ = initial_pair(extend_initial(u0, N, d.grid), N)
    traj = solve_fp(d, v0, output_times(1.0))
    assert traj.max_mass_error() <= 1e-8
    assert traj.fields.min() >= -1e-8 * v0.values.max()
    assert traj.richardson_diff < 1e-6


def test_refinement_changes_little(ehrenfest, u0):
    N = 50
    finals = []
    for r in (8, 16):
        d = discretize_fp(ehrenfest, N, r)
        _, v0, _ = initial_pair(extend_initial(u0, N, d.grid), N)
        finals.append(solve_fp(d, v0, output_times(1.0)).lattice(N)[-1])
    assert np.max(np.abs(finals[0] - finals[1])) <= 1e-5


def test_richardson_failure(ehrenfest, u0):
    N = 40
    d = discretize_fp(ehrenfest, N)
    _, v0, _ = initial_pair(extend_initial(u0, N, d.grid), N)
    with pytest.raises(RichardsonFailed):
        solve_fp(d, v0, [0.0, 0.5], dt=0.5)


def test_foreign_grid_rejected(ehrenfest):
    d = discretize_fp(ehrenfest, 20)
    other = GridSpec(20, 4)
    with pytest.raises(ValidationError):
        solve_fp(d, GridFunction(other, np.zeros(other.M)), [0.0, 1.0])
