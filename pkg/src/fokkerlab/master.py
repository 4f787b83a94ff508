"""Master equations of the one-step process.

The chain lives on ``{0, ..., N}``; from state ``k`` it jumps up with rate
``a_k = N A(k/N)`` and down with rate ``c_k = N C(k/N)``. Its distribution
solves ``p' = A_N p`` where ``A_N`` is tridiagonal with zero column sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import tridiag
from .errors import (
    InvalidModel,
    LengthMismatch,
    NTooSmall,
    Reducible,
    ToleranceNotMet,
    ValidationError,
    ZeroMass,
)
from .grid import GridFunction, sample_at_lattice
from .rates import RateModel, validate_rate_model

MIN_STEP = 1e-12


@dataclass(frozen=True, eq=False)
class TridiagonalGenerator:
    """Transition-rate matrix ``A_N`` in three-band storage.

    ``sub[k] = a_k`` for k < N, ``sup[k-1] = c_k`` for k >= 1 and
    ``diag[k] = -(a_k + c_k)`` with ``a_N = c_0 = 0``.
    """

    N: int
    sub: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)
    sup: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("sub", "diag", "sup"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.diag) != self.N + 1 or len(self.sub) != self.N or len(self.sup) != self.N:
            raise LengthMismatch("band lengths do not match N")

    @classmethod
    def from_rates(cls, a, c) -> "TridiagonalGenerator":
        """Build from full rate vectors ``a_0..a_N`` and ``c_0..c_N``; ``a_N`` and ``c_0`` are dropped."""
        a = np.asarray(a, dtype=float)
        c = np.asarray(c, dtype=float)
        N = len(a) - 1
        a_used = a[:-1]
        c_used = c[1:]
        diag = np.zeros(N + 1)
        diag[:-1] -= a_used
        diag[1:] -= c_used
        return cls(N, a_used, diag, c_used)

    def column_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[:-1] += self.sub
        s[1:] += self.sup
        return s

    def row_sums(self) -> np.ndarray:
        return self.apply(np.ones(self.N + 1))

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.N + 1:
            raise LengthMismatch(f"vector of length {v.shape[0]} for N={self.N}")
        if v.ndim == 1:
            return tridiag.matvec(self.sub, self.diag, self.sup, v)
        y = self.diag[:, None] * v
        y[1:] += self.sub[:, None] * v[:-1]
        y[:-1] += self.sup[:, None] * v[1:]
        return y

    def dense(self) -> np.ndarray:
        return tridiag.to_dense(self.sub, self.diag, self.sup)

    @property
    def max_rate(self) -> float:
        return float(np.max(np.abs(self.diag)))


def build_generator(model: RateModel, N: int, enforce_n0: bool = False) -> TridiagonalGenerator:
    """Evaluate the density-dependent rates on the lattice.

    The chain itself is defined for every ``N >= 1``. With ``enforce_n0`` the
    admissibility bound ``N > N0`` of the rate model is required as well.
    """
    if int(N) != N or N < 1:
        raise ValidationError(f"N must be a positive integer, got {N!r}")
    if enforce_n0:
        n0 = validate_rate_model(model).N0
        if N <= n0:
            raise NTooSmall(f"N={N} must exceed N0={n0} of model {model.label!r}")
    z = np.arange(N + 1) / N
    a = N * model.A(z)
    c = N * model.C(z)
    a_used, c_used = a[:-1], c[1:]
    if np.any(a_used < 0) or np.any(c_used < 0):
        raise InvalidModel(f"negative jump rate on the lattice for N={N}")
    gen = TridiagonalGenerator.from_rates(a, c)
    return gen


def normalize_initial(u0grid: GridFunction, N: int) -> tuple[np.ndarray, float]:
    """Lattice samples of ``u0`` divided by ``Q_N = sum_k u0(k/N)``.

    The result is renormalised once more so that it sums to one in floating
    point; :func:`initial_pair` applies the same two divisions to the field.
    """
    lattice = sample_at_lattice(u0grid, N)
    QN = float(np.sum(lattice))
    if not QN > 0:
        raise ZeroMass(f"Q_N = {QN} is not positive")
    p0 = lattice / QN
    p0 = p0 / np.sum(p0)
    return p0, QN


def initial_pair(u0grid: GridFunction, N: int) -> tuple[np.ndarray, GridFunction, float]:
    """Return ``(p0, v0, Q_N)`` whose lattice values agree bit for bit."""
    lattice = sample_at_lattice(u0grid, N)
    QN = float(np.sum(lattice))
    if not QN > 0:
        raise ZeroMass(f"Q_N = {QN} is not positive")
    s = np.sum(lattice / QN)
    p0 = (lattice / QN) / s
    v0 = GridFunction(u0grid.grid, (u0grid.values / QN) / s)
    return p0, v0, QN


@dataclass(frozen=True, eq=False)
class DistributionTrajectory:
    times: np.ndarray
    states: np.ndarray
    steps: int = 0
    rejected: int = 0

    @property
    def N(self) -> int:
        return self.states.shape[1] - 1

    def totals(self) -> np.ndarray:
        return self.states.sum(axis=1)

    def means(self) -> np.ndarray:
        """Mean fraction ``sum_k (k/N) p_k(t)``."""
        return self.states @ (np.arange(self.N + 1) / self.N)

    def max_conservation_error(self) -> float:
        tot = self.totals()
        return float(np.max(np.abs(tot - tot[0])) / max(abs(tot[0]), np.finfo(float).tiny))


def _trapezoid(gen: TridiagonalGenerator, y, dt):
    half = 0.5 * dt
    rhs = y + half * gen.apply(y)
    return tridiag.solve(-half * gen.sub, 1.0 - half * gen.diag, -half * gen.sup, rhs)


def solve_master(
    gen: TridiagonalGenerator,
    p0,
    times,
    rtol: float = 1e-10,
    dt0: float | None = None,
) -> DistributionTrajectory:
    """Integrate ``p' = A_N p`` with the trapezoidal rule and step doubling.

    Each step compares one trapezoidal step with two half steps; the two-half
    result, corrected by local extrapolation, is kept when
    ``|y_half - y_full| / 3 <= rtol * ||y||_inf``. Steps
    are capped at ``2 / max|diag|``, where ``I + (dt/2) A_N`` stays
    non-negative, so non-negative data stay non-negative. ``p0`` may be a
    matrix whose columns are solved together.
    """
    y = np.array(p0, dtype=float)
    if y.shape[0] != gen.N + 1:
        raise LengthMismatch(f"initial vector of length {y.shape[0]} for N={gen.N}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValidationError("times must be a non-empty increasing array starting at t >= 0")

    dt_cap = 2.0 / gen.max_rate if gen.max_rate > 0 else np.inf
    dt = min(dt_cap, 1e-3 if dt0 is None else dt0)
    t = 0.0
    out = np.empty((times.size,) + y.shape)
    steps = rejected = 0
    for i, target in enumerate(times):
        while t < target:
            h = min(dt, target - t)
            # land exactly on the output time when within a hair of it
            if target - (t + h) < 1e-14 * max(1.0, target):
                h = target - t
            full = _trapezoid(gen, y, h)
            mid = _trapezoid(gen, y, 0.5 * h)
            fine = _trapezoid(gen, mid, 0.5 * h)
            err = np.max(np.abs(fine - full)) / 3.0
            scale = max(np.max(np.abs(fine)), np.finfo(float).tiny)
            if err <= rtol * scale:
                # local extrapolation: the trapezoidal error is O(h^3) per step
                y = fine + (fine - full) / 3.0
                t = target if h == target - t else t + h
                steps += 1
                grow = 2.0 if err == 0 else min(2.0, 0.9 * (rtol * scale / err) ** (1 / 3))
                dt = min(dt_cap, max(dt, h * max(1.0, grow)))
            else:
                rejected += 1
                dt = h * max(0.2, 0.9 * (rtol * scale / err) ** (1 / 3))
                if dt < MIN_STEP:
                    raise ToleranceNotMet(f"step size fell below {MIN_STEP} at t={t:.6g}")
        out[i] = y
    return DistributionTrajectory(times.copy(), out, steps, rejected)


def stationary_distribution(gen: TridiagonalGenerator) -> np.ndarray:
    """Detailed-balance product ``pi_k ~ prod_{j<=k} a_{j-1} / c_j``, in log space."""
    if np.any(gen.sub <= 0) or np.any(gen.sup <= 0):
        raise Reducible("a zero jump rate splits the state space")
    logpi = np.concatenate([[0.0], np.cumsum(np.log(gen.sub) - np.log(gen.sup))])
    return np.exp(logpi - logsumexp(logpi))
