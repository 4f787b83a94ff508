import numpy as np
import pytest

from fokkerlab.convergence import (
    config_digest,
    mean_field,
    mean_field_gap,
    output_times,
    run_convergence,
    run_pair,
    synthetic_report,
)
from fokkerlab.errors import DegenerateFit, ValidationError, ZeroMass
from fokkerlab.rates import BUILTIN_MODELS, InitialFunction


def test_error_zero_at_t0(ehrenfest, u0):
    pair = run_pair(ehrenfest, u0, 30, [0.0])
    assert pair.errors[0] == 0.0


def test_zero_u0(ehrenfest):
    with pytest.raises(ZeroMass):
        run_pair(ehrenfest, InitialFunction((0.0,)), 20, [0.0, 1.0])


def test_scaling_u0_leaves_error(ehrenfest, u0):
    t = output_times(1.0)
    a = run_pair(ehrenfest, u0, 40, t)
    b = run_pair(ehrenfest, InitialFunction(tuple(2 * c for c in u0.u0_coeffs)), 40, t)
    assert np.array_equal(a.errors, b.errors)
    assert np.allclose(b.unnormalized_errors, 2 * a.unnormalized_errors, rtol=1e-14)


def test_unnormalized_scale(ehrenfest, u0):
    # Q_N is close to N times the integral of u0 (= 1)
    pair = run_pair(ehrenfest, u0, 80, [0.0, 0.5])
    assert pair.QN == pytest.approx(80, rel=0.02)


def test_refinement_sanity(ehrenfest, u0):
    t = output_times(1.0)
    a = run_pair(ehrenfest, u0, 50, t, r=8).errors
    b = run_pair(ehrenfest, u0, 50, t, r=16).errors
    assert np.all(np.abs(a - b) <= np.maximum(0.1 * a, 1e-7))


def test_synthetic_orders():
    rep = synthetic_report([50, 100, 200, 400], -1.0, 3.0)
    assert rep.fitted_order == pytest.approx(-1.0, abs=1e-12) and rep.r2 == pytest.approx(1.0)
    assert synthetic_report([10, 20, 40], -2.0).fitted_order == pytest.approx(-2.0, abs=1e-12)


def test_ladder_guards(ehrenfest, u0):
    with pytest.raises(DegenerateFit):
        run_convergence(ehrenfest, u0, 1.0, [50, 100])
    with pytest.raises(ValidationError):
        run_convergence(ehrenfest, u0, 1.0, [50, 40, 100])


def test_non_admissible_u0_flagged(ehrenfest):
    rep = run_convergence(ehrenfest, InitialFunction((1.0,)), 0.2, [10, 20, 40])
    assert not rep.admissible_u0 and rep.notes


def test_small_ladder_order_and_digest(ehrenfest, u0):
    rep = run_convergence(ehrenfest, u0, 0.5, [20, 40, 80])
    assert rep.fitted_order < -0.9
    assert rep.K == max(e.N * e.sup_error for e in rep.entries)
    again = run_convergence(ehrenfest, u0, 0.5, [20, 40, 80])
    assert rep.to_dict(timings=False) == again.to_dict(timings=False)
    assert rep.digest == again.digest != config_digest({"other": 1})


def test_mean_field_examples(ehrenfest):
    t = np.linspace(0, 2, 11)
    assert np.allclose(mean_field(ehrenfest, 0.5, t), 0.5, atol=1e-15)
    assert np.allclose(mean_field(ehrenfest, 1.0, t), 0.5 + 0.5 * np.exp(-2 * t), atol=1e-12)
    with pytest.raises(ValidationError):
        mean_field(ehrenfest, 1.5, t)


def test_mean_field_gap_decreases():
    sis = BUILTIN_MODELS["sis"]
    t = output_times(1.0)
    gaps = [mean_field_gap(sis, N, t) for N in (25, 50, 100)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[0] / gaps[2] == pytest.approx(4, rel=0.15)
