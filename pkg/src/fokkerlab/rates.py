"""Density-dependent rate functions and admissible initial profiles.

Rates ``A`` (up-jumps, k -> k+1) and ``C`` (down-jumps, k -> k-1) are
polynomials on the extended interval ``[-eta, 1+eta]``; coefficients are
stored lowest degree first, as in :mod:`numpy.polynomial.polynomial`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    DegenerateModel,
    InvalidInitial,
    InvalidModel,
    NoAdmissibleN0,
    OrderTooHigh,
    OutOfDomain,
    SignConditionViolated,
    ValidationError,
)
from .grid import GridFunction, GridSpec

MAX_DEGREE = 16
MAX_ORDER = 4
ENDPOINT_TOL = 1e-12
SAMPLES = 10_000  # points per unit length for the sign checks
N0_LIMIT = 10**9


def _coeffs(c) -> tuple[float, ...]:
    c = tuple(float(v) for v in c)
    if not c:
        raise InvalidModel("polynomial coefficient list is empty")
    return c


def polyder(c, order: int = 1) -> np.ndarray:
    if order == 0:
        return np.asarray(c, dtype=float)
    d = P.polyder(np.asarray(c, dtype=float), order)
    return d if d.size else np.zeros(1)


def polyval(c, z):
    """Horner evaluation of a lowest-first coefficient list."""
    return P.polyval(z, np.asarray(c, dtype=float))


@dataclass(frozen=True)
class RateModel:
    a_coeffs: tuple[float, ...]
    c_coeffs: tuple[float, ...]
    eta: float = 0.1
    label: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "a_coeffs", _coeffs(self.a_coeffs))
        object.__setattr__(self, "c_coeffs", _coeffs(self.c_coeffs))
        object.__setattr__(self, "eta", float(self.eta))
        if not self.eta > 0:
            raise InvalidModel(f"eta must be positive, got {self.eta}")

    def coeffs(self, which: str) -> tuple[float, ...]:
        which = which.upper()
        if which == "A":
            return self.a_coeffs
        if which == "C":
            return self.c_coeffs
        if which in ("A+C", "SUM"):
            return tuple(P.polyadd(self.a_coeffs, self.c_coeffs))
        if which in ("A-C", "DIFF"):
            return tuple(P.polysub(self.a_coeffs, self.c_coeffs))
        raise ValueError(f"unknown rate {which!r}")

    def A(self, z, order: int = 0):
        return eval_rate(self, "A", order, z)

    def C(self, z, order: int = 0):
        return eval_rate(self, "C", order, z)

    @property
    def degree(self) -> int:
        return max(len(self.a_coeffs), len(self.c_coeffs)) - 1

    def sup_norm(self, which: str, order: int = 0, lo: float | None = None, hi: float | None = None) -> float:
        """Sampled sup norm of a rate combination derivative over [lo, hi]."""
        lo = -self.eta if lo is None else lo
        hi = 1 + self.eta if hi is None else hi
        z = np.linspace(lo, hi, SAMPLES)
        return float(np.max(np.abs(polyval(polyder(self.coeffs(which), order), z))))

    def contraction_rate(self, N: int | None = None) -> float:
        """``||(A+C)''|| + ||A'|| + ||C'||``.

        Norms are over [0, 1] by default, or over [-h, 1+h] with h = 1/(2N)
        when ``N`` is given (the domain of the Fokker-Planck flow).
        """
        lo, hi = (0.0, 1.0) if N is None else (-0.5 / N, 1 + 0.5 / N)
        return (
            self.sup_norm("A+C", 2, lo, hi)
            + self.sup_norm("A", 1, lo, hi)
            + self.sup_norm("C", 1, lo, hi)
        )


def eval_rate(model: RateModel, which: str, order: int, z):
    if order > MAX_ORDER:
        raise OrderTooHigh(f"derivative order {order} exceeds {MAX_ORDER}")
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    za = np.asarray(z, dtype=float)
    tol = 1e-12
    if np.any(za < -model.eta - tol) or np.any(za > 1 + model.eta + tol):
        raise OutOfDomain(f"z outside [-{model.eta}, {1 + model.eta}]")
    out = polyval(polyder(model.coeffs(which), order), za)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ValidationReport:
    label: str
    checks: dict[str, bool]
    witnesses: dict[str, float]
    N0: int | None
    failure: str | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and self.N0 is not None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "passed": self.passed,
            "checks": dict(self.checks),
            "witnesses": dict(self.witnesses),
            "N0": self.N0,
            "failure": self.failure,
        }


def _strip(lo: float, hi: float) -> np.ndarray:
    n = max(2, int(math.ceil(SAMPLES * (hi - lo))) + 1)
    return np.linspace(lo, hi, n)


def validate_rate_model(model: RateModel, raise_on_failure: bool = True) -> ValidationReport:
    """Check the non-degeneracy and sign conditions and find ``N0``.

    ``N0`` is the smallest integer strictly above ``1/(2 eta)`` such that
    ``2 N0 |A - C| > |A' + C'|`` at every sampled point of the two extension
    strips ``[-eta, 0]`` and ``[1, 1+eta]``.
    """
    eta = model.eta
    checks: dict[str, bool] = {}
    wit: dict[str, float] = {}
    failure = None
    error = None

    z = np.linspace(-eta, 1 + eta, SAMPLES)
    s = polyval(model.coeffs("A+C"), z)
    checks["degree"] = model.degree <= MAX_DEGREE
    checks["sum_positive"] = bool(np.all(s > 0))
    wit["min_sum"] = float(s.min())
    wit["argmin_sum"] = float(z[np.argmin(s)])
    if not checks["sum_positive"] and error is None:
        error = DegenerateModel(f"A+C <= 0 at x={wit['argmin_sum']:.6g} (min {wit['min_sum']:.6g})")

    left, right = _strip(-eta, 0.0), _strip(1.0, 1 + eta)
    dl = polyval(model.coeffs("A-C"), left)
    dr = polyval(model.coeffs("A-C"), right)
    checks["drift_left_positive"] = bool(np.all(dl > 0))
    checks["drift_right_negative"] = bool(np.all(dr < 0))
    wit["min_drift_left"] = float(dl.min())
    wit["max_drift_right"] = float(dr.max())
    if not checks["drift_left_positive"] and error is None:
        x = float(left[np.argmax(~(dl > 0))])
        error = SignConditionViolated(f"A-C must be positive on [-eta, 0]; fails at x={x:.6g}", x)
    if not checks["drift_right_negative"] and error is None:
        x = float(right[np.argmax(~(dr < 0))])
        error = SignConditionViolated(f"A-C must be negative on [1, 1+eta]; fails at x={x:.6g}", x)

    unit = np.linspace(0.0, 1.0, SAMPLES)
    amin = float(polyval(model.a_coeffs, unit).min())
    cmin = float(polyval(model.c_coeffs, unit).min())
    checks["rates_nonnegative"] = amin >= -ENDPOINT_TOL and cmin >= -ENDPOINT_TOL
    wit["min_A_unit"] = amin
    wit["min_C_unit"] = cmin
    if not checks["rates_nonnegative"] and error is None:
        error = InvalidModel(f"A and C must be non-negative on [0, 1] (min A {amin:.3g}, min C {cmin:.3g})")

    a1 = polyval(model.a_coeffs, 1.0)
    c0 = polyval(model.c_coeffs, 0.0)
    checks["endpoint_A1_zero"] = abs(a1) <= ENDPOINT_TOL
    checks["endpoint_C0_zero"] = abs(c0) <= ENDPOINT_TOL
    wit["A(1)"] = float(a1)
    wit["C(0)"] = float(c0)
    if not (checks["endpoint_A1_zero"] and checks["endpoint_C0_zero"]) and error is None:
        error = InvalidModel(f"need A(1) = C(0) = 0, got A(1)={a1:.3g}, C(0)={c0:.3g}")
    if not checks["degree"] and error is None:
        error = InvalidModel(f"polynomial degree {model.degree} exceeds {MAX_DEGREE}")

    N0 = None
    if error is None:
        strips = np.concatenate([left, right])
        ds = np.abs(np.concatenate([dl, dr]))
        slope = np.abs(polyval(polyder(model.coeffs("A+C"), 1), strips))
        need = max(1.0 / (2 * eta), float(np.max(slope / (2 * ds))))
        wit["N0_lower_bound"] = need
        if need >= N0_LIMIT:
            error = NoAdmissibleN0(f"N0 search exceeds {N0_LIMIT}")
        else:
            N0 = math.floor(need) + 1

    if error is not None:
        failure = f"{type(error).__name__}: {error}"
        if raise_on_failure:
            raise error
    return ValidationReport(model.label, checks, wit, N0, failure)


def admissible_n0(model: RateModel) -> int:
    return validate_rate_model(model).N0


@dataclass(frozen=True)
class InitialFunction:
    """Unnormalised initial profile ``u0`` on [0, 1], extended by zero outside."""

    u0_coeffs: tuple[float, ...] = field(default=(0.0, 0.0, 30.0, -60.0, 30.0))

    def __post_init__(self):
        object.__setattr__(self, "u0_coeffs", _coeffs(self.u0_coeffs))

    def __call__(self, z, order: int = 0):
        return polyval(polyder(self.u0_coeffs, order), z)

    def violations(self) -> list[str]:
        out = []
        z = np.linspace(0.0, 1.0, SAMPLES)
        if np.any(self(z) < 0):
            out.append("u0 takes negative values on [0, 1]")
        for name, val in (
            ("u0(0)", self(0.0)),
            ("u0'(0)", self(0.0, 1)),
            ("u0(1)", self(1.0)),
            ("u0'(1)", self(1.0, 1)),
        ):
            if abs(val) > ENDPOINT_TOL:
                out.append(f"{name} = {val:.3g} is not zero")
        return out

    @property
    def admissible(self) -> bool:
        return not self.violations()

    def third_derivative_match(self, tol: float = 1e-10) -> bool:
        """Whether ``u0'''(0) == u0'''(1)`` (extra hypothesis for the order-3 probe)."""
        return abs(self(0.0, 3) - self(1.0, 3)) <= tol


def extend_initial(u0: InitialFunction, N: int, grid: GridSpec | None = None, allow_invalid: bool = False) -> GridFunction:
    """Sample ``u0`` on the grid, exactly zero outside [0, 1]."""
    grid = GridSpec(N) if grid is None else grid
    if grid.N != N:
        raise ValidationError(f"grid built for N={grid.N}, asked for N={N}")
    if not allow_invalid:
        bad = u0.violations()
        if bad:
            raise InvalidInitial("; ".join(bad))
    values = np.zeros(grid.M)
    sl = grid.interior_slice
    values[sl] = u0(grid.nodes[sl])
    return GridFunction(grid, values)


# builtin models ---------------------------------------------------------

BUILTIN_MODELS = {
    "ehrenfest": RateModel((1.0, -1.0), (0.0, 1.0), 0.1, "ehrenfest"),
    # A = 2(1-z), C = z
    "biased_ehrenfest": RateModel((2.0, -2.0), (0.0, 1.0), 0.1, "biased_ehrenfest"),
    # SIS with background infection: A = (0.5 + 2z)(1-z), C = z
    "sis": RateModel((0.5, 1.5, -2.0), (0.0, 1.0), 0.1, "sis"),
}

DEFAULT_U0 = InitialFunction()


def parse_model_text(text: str, source: str = "<string>") -> tuple[RateModel, InitialFunction]:
    """Parse the ``key = value`` model format.

    Recognised keys are ``a_coeffs``, ``c_coeffs``, ``eta``, ``u0_coeffs`` and
    ``label``. Coefficients are comma or whitespace separated decimals,
    lowest degree first. ``#`` starts a comment. ``eta``, ``u0_coeffs`` and
    ``label`` are optional.
    """
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ("a_coeffs", "c_coeffs", "eta", "u0_coeffs", "label"):
            raise ValidationError(f"{source}:{lineno}: unknown key {key!r}")
        fields[key] = value

    def nums(key):
        try:
            return tuple(float(v) for v in fields[key].replace(",", " ").split())
        except ValueError as exc:
            raise ValidationError(f"{source}: bad number in {key}: {exc}") from None

    for key in ("a_coeffs", "c_coeffs"):
        if key not in fields:
            raise ValidationError(f"{source}: missing required key {key!r}")
    try:
        eta = float(fields.get("eta", "0.1"))
    except ValueError:
        raise ValidationError(f"{source}: bad eta {fields['eta']!r}") from None
    model = RateModel(nums("a_coeffs"), nums("c_coeffs"), eta, fields.get("label", Path(source).stem))
    u0 = InitialFunction(nums("u0_coeffs")) if "u0_coeffs" in fields else DEFAULT_U0
    return model, u0


def format_model_text(model: RateModel, u0: InitialFunction | None = None) -> str:
    def fmt(c):
        return ", ".join(repr(float(v)) for v in c)

    lines = [
        f"label = {model.label}",
        f"a_coeffs = {fmt(model.a_coeffs)}",
        f"c_coeffs = {fmt(model.c_coeffs)}",
        f"eta = {model.eta!r}",
    ]
    if u0 is not None:
        lines.append(f"u0_coeffs = {fmt(u0.u0_coeffs)}")
    return "\n".join(lines) + "\n"


def load_model(spec: str) -> tuple[RateModel, InitialFunction]:
    """Resolve a builtin model name or read a model file."""
    if spec in BUILTIN_MODELS:
        return BUILTIN_MODELS[spec], DEFAULT_U0
    path = Path(spec)
    if not path.is_file():
        raise ValidationError(
            f"model file not found: {spec} (builtin models: {', '.join(sorted(BUILTIN_MODELS))})"
        )
    return parse_model_text(path.read_text(), str(path))
