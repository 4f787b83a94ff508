import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from fokkerlab.errors import (
    DegenerateModel,
    InvalidInitial,
    OrderTooHigh,
    OutOfDomain,
    SignConditionViolated,
    ValidationError,
)
from fokkerlab.grid import GridSpec
from fokkerlab.rates import (
    BUILTIN_MODELS,
    InitialFunction,
    RateModel,
    eval_rate,
    extend_initial,
    format_model_text,
    load_model,
    parse_model_text,
    validate_rate_model,
)


def test_ehrenfest_valid_with_n0_6(ehrenfest):
    rep = validate_rate_model(ehrenfest)
    assert rep.passed
    assert rep.N0 == 6


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
def test_builtin_models_valid(name):
    rep = validate_rate_model(BUILTIN_MODELS[name])
    assert rep.passed and math.isfinite(rep.N0)


def test_flipped_signs_violate_at_left_edge():
    model = RateModel((0.0, 1.0), (1.0, -1.0), 0.1, "flipped")
    # endpoint conditions fail too, but the sign check comes first
    with pytest.raises(SignConditionViolated) as exc:
        validate_rate_model(model)
    assert exc.value.x == pytest.approx(-0.1)


def test_zero_rates_degenerate():
    with pytest.raises(DegenerateModel):
        validate_rate_model(RateModel((0.0,), (0.0,), 0.1, "zero"))


def test_report_without_raising():
    rep = validate_rate_model(RateModel((0.0,), (0.0,), 0.1), raise_on_failure=False)
    assert not rep.passed and rep.failure


def _n0_oracle(model):
    # independent dense-sampling evaluation of the admissibility bound
    eta = model.eta
    worst = 1 / (2 * eta)
    for lo, hi in ((-eta, 0.0), (1.0, 1 + eta)):
        z = np.linspace(lo, hi, 20001)
        ratio = np.abs(model.A(z, 1) + model.C(z, 1)) / (2 * np.abs(model.A(z) - model.C(z)))
        worst = max(worst, ratio.max())
    return math.floor(worst) + 1


@pytest.mark.parametrize(
    "model",
    [
        BUILTIN_MODELS["sis"],
        BUILTIN_MODELS["biased_ehrenfest"],
        RateModel((1.0, -1.0), (0.0, 1.0), 0.45, "ehrenfest_wide"),
    ],
    ids=lambda m: m.label,
)
def test_n0_matches_oracle(model):
    assert validate_rate_model(model).N0 == _n0_oracle(model)


def test_eval_rate_examples(ehrenfest):
    assert ehrenfest.A(0.5) == 0.5
    assert np.all(ehrenfest.A(np.linspace(0, 1, 7), 1) == -1)
    assert np.all(ehrenfest.C(np.linspace(0, 1, 7), 2) == 0)
    assert eval_rate(ehrenfest, "A", 0, 0.25) == 0.75


def test_eval_rate_guards(ehrenfest):
    with pytest.raises(OrderTooHigh):
        ehrenfest.A(0.5, 5)
    with pytest.raises(OutOfDomain):
        ehrenfest.A(1.2)


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
@pytest.mark.parametrize("which", ["A", "C"])
def test_derivative_matches_central_difference(name, which, rng):
    model = BUILTIN_MODELS[name]
    f = model.A if which == "A" else model.C
    z = rng.uniform(-0.09, 1.09, 100)
    step = 1e-5
    for k in range(1, 5):
        exact = f(z, k)
        fd = (f(z + step, k - 1) - f(z - step, k - 1)) / (2 * step)
        scale = np.maximum(np.abs(exact), 1.0)
        assert np.all(np.abs(fd - exact) <= 1e-6 * scale)


def test_extend_initial_zero_outside(u0):
    for N in (2, 7, 50):
        g = extend_initial(u0, N)
        x = g.grid.nodes
        assert np.all(g.values[(x < 0) | (x > 1)] == 0.0)


def test_u0_midpoint_and_integral(u0):
    assert u0(0.5) == pytest.approx(1.875, abs=1e-15)
    val, _ = integrate.quad(u0, 0, 1)
    assert val == pytest.approx(1.0, abs=1e-13)


def test_extension_junctions(u0):
    # u0 and u0' vanish at both ends, so the extension is C^1; u0'' does not
    # vanish (it is 60 at both ends), and the second differences jump by it
    N = 40
    g = GridSpec(N, 8)
    v = extend_initial(u0, N, g).values
    dx = g.dx
    for j, z in ((g.r, 0.0), (g.r * (2 * N + 1), 1.0)):
        d_left = (v[j] - v[j - 1]) / dx
        d_right = (v[j + 1] - v[j]) / dx
        assert abs(d_left - d_right) <= 2 * u0(z, 2) * dx
        left = (v[j] - 2 * v[j - 1] + v[j - 2]) / dx**2
        right = (v[j + 2] - 2 * v[j + 1] + v[j]) / dx**2
        assert abs(right - left) == pytest.approx(u0(z, 2), abs=400 * dx)


def test_invalid_initial_rejected():
    with pytest.raises(InvalidInitial):
        extend_initial(InitialFunction((1.0,)), 10)
    g = extend_initial(InitialFunction((1.0,)), 10, allow_invalid=True)
    assert g.values.max() == 1.0


def test_third_derivative_hypothesis(u0):
    assert u0(0.0, 3) == pytest.approx(-360)
    assert u0(1.0, 3) == pytest.approx(360)
    assert not u0.third_derivative_match()
    # z^2 (1-z)^2 (1 + 2z(1-z)) has a vanishing third derivative at both ends
    P = np.polynomial.polynomial
    w = InitialFunction(tuple(P.polymul(P.polypow([0, 1, -1], 2), [1, 2, -2])))
    assert w.admissible
    assert w.third_derivative_match()


def test_model_text_roundtrip(ehrenfest, u0):
    text = format_model_text(ehrenfest, u0)
    m, w = parse_model_text(text)
    assert m == ehrenfest and w == u0


def test_model_file_comments(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# biased\nlabel = b\na_coeffs = 2, -2\nc_coeffs = 0 1\neta = 0.2\n")
    m, _ = load_model(str(p))
    assert m.a_coeffs == (2.0, -2.0) and m.eta == 0.2 and m.label == "b"


def test_missing_model_file_names_path(tmp_path):
    missing = str(tmp_path / "nope.txt")
    with pytest.raises(ValidationError, match="nope.txt"):
        load_model(missing)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0))
def test_linear_models_valid(alpha, beta):
    # A = alpha (1 - z), C = beta z satisfies the sign conditions whenever
    # A + C stays positive on the extension
    assume(alpha - 1.1 * (alpha - beta) > 1e-6 and alpha + 0.1 * (alpha - beta) > 1e-6)
    rep = validate_rate_model(RateModel((alpha, -alpha), (0.0, beta), 0.1))
    assert rep.passed and rep.N0 >= 6
