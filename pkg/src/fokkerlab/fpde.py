"""Finite-volume Fokker-Planck solver on [-h, 1+h] with zero-flux ends.

The equation is written in flux form, ``u_t = F_z`` with

    F = ((A+C) u)' / (2N) - (A-C) u,

and the boundary conditions say ``F = 0`` at ``-h`` and ``1+h``. Nodes are
vertex centred: interior nodes own a cell of width ``dx``, the two end nodes
a half cell whose outer face is the domain boundary, where the flux is set
to zero. Total mass ``sum_j V_j u_j`` (trapezoid weights) is conserved
exactly by the discrete operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import tridiag
from .errors import (
    LengthMismatch,
    NTooSmall,
    QuadratureFailed,
    RefinementTooSmall,
    RichardsonFailed,
    ValidationError,
)
from .grid import GridFunction, GridSpec
from .rates import RateModel, validate_rate_model

RICHARDSON_TOL = 1e-6
DT_MAX = 1e-3


@dataclass(frozen=True, eq=False)
class FpDiscretization:
    grid: GridSpec
    diffusion: np.ndarray = field(repr=False)  # (A+C)(x_j) / 2N at nodes
    drift: np.ndarray = field(repr=False)  # (A-C)(x_j) at nodes
    sub: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)
    sup: np.ndarray = field(repr=False)
    label: str = "model"

    @property
    def N(self) -> int:
        return self.grid.N

    def apply(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.grid.M,):
            raise LengthMismatch(f"field of shape {w.shape} on a grid of {self.grid.M} nodes")
        return tridiag.matvec(self.sub, self.diag, self.sup, w)

    def fluxes(self, w) -> np.ndarray:
        """Interface fluxes ``F_{j+1/2}``, j = 0 .. M-2 (end faces are zero)."""
        w = np.asarray(w, dtype=float)
        g = self.diffusion * w
        e = self.drift * w
        return (g[1:] - g[:-1]) / self.grid.dx - 0.5 * (e[:-1] + e[1:])

    def interface_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """Interface diffusion and drift weights (averages of the nodal values)."""
        return 0.5 * (self.diffusion[1:] + self.diffusion[:-1]), 0.5 * (self.drift[1:] + self.drift[:-1])

    def max_cell_peclet(self) -> float:
        d, e = self.interface_coeffs()
        return float(np.max(np.abs(e) * self.grid.dx / d))

    def stable_dt(self) -> float:
        return min(DT_MAX, self.grid.dx / (2 * float(np.max(np.abs(self.drift)))))


def discretize_fp(model: RateModel, N: int, r: int = 8, enforce_n0: bool = True) -> FpDiscretization:
    if int(r) != r or r < 2:
        raise RefinementTooSmall(f"refinement r must be an integer >= 2, got {r!r}")
    if enforce_n0:
        n0 = validate_rate_model(model).N0
        if N <= n0:
            raise NTooSmall(f"N={N} must exceed N0={n0} of model {model.label!r}")
    grid = GridSpec(N, r)
    x = grid.nodes
    dx = grid.dx
    D = model.A(x) + model.C(x)
    D = D / (2 * N)
    e = model.A(x) - model.C(x)

    # F_{j+1/2} = alpha_j w_{j+1} - beta_j w_j
    alpha = D[1:] / dx - 0.5 * e[1:]
    beta = D[:-1] / dx + 0.5 * e[:-1]
    vol = grid.weights
    M = grid.M
    diag = np.zeros(M)
    diag[:-1] -= beta
    diag[1:] -= alpha
    sup = alpha / vol[:-1]
    sub = beta / vol[1:]
    diag /= vol
    return FpDiscretization(grid, D, e, sub, diag, sup, model.label)


@dataclass(frozen=True, eq=False)
class FieldTrajectory:
    grid: GridSpec
    times: np.ndarray
    fields: np.ndarray = field(repr=False)
    dt: float = float("nan")
    richardson_diff: float = float("nan")

    def at(self, i: int) -> GridFunction:
        return GridFunction(self.grid, self.fields[i])

    def masses(self) -> np.ndarray:
        return self.fields @ self.grid.weights

    def max_mass_error(self) -> float:
        m = self.masses()
        if m[0] == 0:
            return float(np.max(np.abs(m)))
        return float(np.max(np.abs(m - m[0])) / abs(m[0]))

    def lattice(self, N: int | None = None) -> np.ndarray:
        """Lattice samples at every stored time, shape (T, N+1)."""
        N = self.grid.N if N is None else N
        from .grid import sample_at_lattice

        return np.array([sample_at_lattice(self.at(i), N) for i in range(len(self.times))])


def _crank_nicolson(disc: FpDiscretization, u0: np.ndarray, times: np.ndarray, dt_base: float):
    out = np.empty((times.size, u0.size))
    u = u0.copy()
    t = 0.0
    cache: dict[int, tridiag.Factorized] = {}
    dts = []
    for i, target in enumerate(times):
        span = target - t
        if span > 0:
            n = max(1, math.ceil(span / dt_base - 1e-9))
            dt = span / n
            dts.append(dt)
            key = round(dt * 1e15)
            if key not in cache:
                half = 0.5 * dt
                cache[key] = tridiag.Factorized(-half * disc.sub, 1.0 - half * disc.diag, -half * disc.sup)
            lu = cache[key]
            half = 0.5 * dt
            for _ in range(n):
                u = lu.solve(u + half * disc.apply(u))
        out[i] = u
        t = target
    return out, (max(dts) if dts else dt_base)


def solve_fp(disc: FpDiscretization, u0grid: GridFunction, times, dt: float | None = None) -> FieldTrajectory:
    """Crank-Nicolson integration with one Richardson halving check.

    The run is repeated with half the step; the halved solution is returned
    once the two final fields agree to ``RICHARDSON_TOL`` in sup norm. A
    second halving is allowed before giving up.
    """
    if u0grid.grid != disc.grid:
        raise ValidationError("initial field lives on a different grid")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValidationError("times must be a non-empty increasing array starting at t >= 0")
    dt = disc.stable_dt() if dt is None else dt
    u0 = np.array(u0grid.values)

    coarse, _ = _crank_nicolson(disc, u0, times, dt)
    diff = float("nan")
    for attempt in range(2):
        dt *= 0.5
        fine, used = _crank_nicolson(disc, u0, times, dt)
        diff = float(np.max(np.abs(fine[-1] - coarse[-1])))
        if diff < RICHARDSON_TOL:
            return FieldTrajectory(disc.grid, times.copy(), fine, used, diff)
        coarse = fine
    raise RichardsonFailed(f"halved-step solutions still differ by {diff:.3g} at t={times[-1]}")


def fp_stationary(model: RateModel, N: int, grid: GridSpec | None = None, tol: float = 1e-12) -> GridFunction:
    """Zero-flux steady state ``exp(2N int_0^x (A-C)/(A+C)) / (A+C)(x)``.

    The exponent is accumulated node to node from ``x = 0`` with adaptive
    quadrature and the result is normalised to unit discrete mass.
    """
    grid = GridSpec(N) if grid is None else grid
    x = grid.nodes
    a_c = np.asarray(model.coeffs("A-C"))
    apc = np.asarray(model.coeffs("A+C"))
    from .rates import polyval

    def ratio(s):
        return polyval(a_c, s) / polyval(apc, s)

    pieces = np.zeros(grid.M - 1)
    for j in range(grid.M - 1):
        val, err = integrate.quad(ratio, x[j], x[j + 1], epsabs=tol * 1e-3, epsrel=tol)
        if not np.isfinite(val) or err > tol:
            raise QuadratureFailed(f"quadrature on [{x[j]}, {x[j + 1]}] reported error {err:.3g}")
        pieces[j] = val
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    integral = cum - cum[grid.r]  # anchored at x = 0
    logu = 2 * N * integral - np.log(polyval(apc, x))
    u = np.exp(logu - logu.max())
    u /= np.dot(grid.weights, u)
    return GridFunction(grid, u)


def discrete_stationary(disc: FpDiscretization, max_iter: int = 50, tol: float = 1e-12) -> GridFunction:
    """Null vector of the discrete operator by shifted inverse iteration.

    The operator is exactly singular, so the shift is a tiny multiple of its
    norm. Iteration stops when ``||L w|| <= tol ||L|| ||w||`` or after
    ``max_iter`` sweeps. The result has unit discrete mass.
    """
    norm = float(np.max(np.abs(disc.diag)) + np.max(np.abs(disc.sub)) + np.max(np.abs(disc.sup)))
    shift = 1e-10 * norm
    lu = tridiag.Factorized(disc.sub, disc.diag + shift, disc.sup)
    w = np.ones(disc.grid.M)
    weights = disc.grid.weights
    for _ in range(max_iter):
        w = lu.solve(w)
        w /= np.dot(weights, w)
        if np.max(np.abs(disc.apply(w))) <= tol * norm * np.max(np.abs(w)):
            break
    return GridFunction(disc.grid, w)


def zero_flux_recurrence(disc: FpDiscretization) -> GridFunction:
    """Discrete steady state from ``F_{j+1/2} = 0`` face by face.

    Independent of any linear solve: each vanishing interface flux fixes
    ``w_{j+1} / w_j``. Used as an oracle for :func:`discrete_stationary`.
    """
    dx = disc.grid.dx
    alpha = disc.diffusion[1:] / dx - 0.5 * disc.drift[1:]
    beta = disc.diffusion[:-1] / dx + 0.5 * disc.drift[:-1]
    logw = np.concatenate([[0.0], np.cumsum(np.log(beta) - np.log(alpha))])
    w = np.exp(logw - logw.max())
    w /= np.dot(disc.grid.weights, w)
    return GridFunction(disc.grid, w)
