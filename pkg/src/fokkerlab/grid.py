"""Uniform grids over the widened interval [-h, 1+h] with h = 1/(2N)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, MisalignedGrid, RefinementTooSmall


@dataclass(frozen=True)
class GridSpec:
    """Node grid with ``r`` cells per half lattice spacing.

    Nodes are ``x_j = (j - r) / (2 r N)`` for ``j = 0 .. 2r(N+1)``, so that
    ``x_0 = -h``, ``x_{M-1} = 1 + h`` and the lattice point ``k/N`` sits on
    node ``r(2k+1)``. Nodes are built from integer offsets to keep ``0`` and
    ``1`` exact in floating point.
    """

    N: int
    r: int = 8

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if int(self.r) != self.r or self.r < 1:
            raise RefinementTooSmall(f"refinement r must be a positive integer, got {self.r!r}")

    @property
    def h(self) -> float:
        return 1.0 / (2 * self.N)

    @property
    def M(self) -> int:
        return 2 * self.r * (self.N + 1) + 1

    @property
    def dx(self) -> float:
        return 1.0 / (2 * self.r * self.N)

    @property
    def x0(self) -> float:
        return -self.h

    @property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.M)
        return (j - self.r) / (2 * self.r * self.N)

    @property
    def lattice_indices(self) -> np.ndarray:
        k = np.arange(self.N + 1)
        return self.r * (2 * k + 1)

    @property
    def interior_slice(self) -> slice:
        """Nodes lying in [0, 1]."""
        return slice(self.r, self.r * (2 * self.N + 1) + 1)

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights of the vertex-centred control volumes (trapezoid)."""
        w = np.full(self.M, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def strip_mask(self) -> np.ndarray:
        """Nodes in [-h, 0] or [1, 1+h]."""
        j = np.arange(self.M)
        return (j <= self.r) | (j >= self.r * (2 * self.N + 1))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.M,):
            raise LengthMismatch(
                f"grid function needs {self.grid.M} values, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def mass(self) -> float:
        return float(np.dot(self.grid.weights, self.values))

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__


def sample_at_lattice(field: GridFunction, N: int) -> np.ndarray:
    """Return ``(u(0), u(1/N), ..., u(1))`` by exact node extraction."""
    grid = field.grid
    if grid.N != N:
        # a grid built for a multiple of N still contains every k/N
        if grid.N % N != 0:
            raise MisalignedGrid(f"grid for N={grid.N} does not contain the lattice of N={N}")
        m = grid.N // N
        k = np.arange(N + 1)
        idx = grid.r * (2 * m * k + 1)
        return np.array(field.values[idx])
    return np.array(field.values[grid.lattice_indices])
