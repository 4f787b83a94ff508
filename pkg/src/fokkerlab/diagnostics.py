"""Observational probes on solved trajectories.

Nothing here decides pass/fail for the open boundary-derivative questions;
the probes report margins, slopes and support flags. The contraction check
is different: the sup-norm bound is a theorem, so a violation there points
at a solver problem.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .consistency import defect_order_study
from .convergence import ConvergenceReport, output_times, run_convergence
from .errors import StencilOutOfRange, ValidationError
from .fitting import fit_order
from .fpde import FieldTrajectory, discretize_fp, solve_fp
from .grid import GridFunction
from .master import DistributionTrajectory, initial_pair
from .rates import InitialFunction, RateModel, extend_initial

STENCIL = 5
MIN_NODES = 7


@lru_cache(maxsize=None)
def _rational_weights(offsets: tuple[int, ...], order: int) -> tuple[np.ndarray, int]:
    """Fornberg's recurrence in exact arithmetic.

    Returns integer numerators and their common denominator, so that the
    weights of a derivative sum to exactly zero in floating point too.
    """
    n = len(offsets)
    c = [[Fraction(0)] * (order + 1) for _ in range(n)]
    c[0][0] = Fraction(1)
    c1 = Fraction(1)
    x = [Fraction(o) for o in offsets]
    for i in range(1, n):
        c2 = Fraction(1)
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            for m in range(min(i, order), -1, -1):
                prev = c[i - 1][m - 1] if m else Fraction(0)
                c[i][m] = c1 * (m * prev - x[i - 1] * c[i - 1][m]) / c2
            for m in range(min(i, order), -1, -1):
                prev = c[j][m - 1] if m else Fraction(0)
                c[j][m] = (x[i] * c[j][m] - m * prev) / c3
        c1 = c2
    w = [c[i][order] for i in range(n)]
    denom = math.lcm(*(f.denominator for f in w))
    return np.array([int(f * denom) for f in w], dtype=float), denom


def fd_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    """Finite-difference weights on integer offsets (unit spacing).

    Exact for polynomials of degree ``len(offsets) - 1``.
    """
    num, denom = _rational_weights(tuple(offsets), order)
    return num / denom


def derivative(values, dx: float, order: int) -> np.ndarray:
    """``order``-th derivative on a uniform grid with 5-point stencils.

    Centred where possible, shifted one-sided stencils in the two nodes
    nearest each end.
    """
    u = np.asarray(values, dtype=float)
    M = u.size
    if M < MIN_NODES:
        raise StencilOutOfRange(f"need at least {MIN_NODES} nodes, got {M}")
    out = np.empty(M)
    j = np.arange(M)
    start = np.clip(j - 2, 0, M - STENCIL)
    shift = j - start  # position of node j inside its window
    for s in range(STENCIL):
        sel = shift == s
        num, denom = _rational_weights(tuple(range(-s, STENCIL - s)), order)
        idx = start[sel][:, None] + np.arange(STENCIL)
        out[sel] = (u[idx] @ num) / denom
    return out / dx**order


@dataclass(frozen=True)
class ConjectureProbe:
    N: int
    t: float
    order: int
    boundary_max: float
    global_max: float
    endpoint_max: float

    @property
    def margin(self) -> float:
        return self.global_max - self.boundary_max

    @property
    def endpoint_margin(self) -> float:
        return self.global_max - self.endpoint_max

    @property
    def supports(self) -> bool:
        """Maximum of the derivative is attained away from both strips."""
        return self.margin > 0

    @property
    def endpoint_supports(self) -> bool:
        """The literal endpoint statement: both end values below the max."""
        return self.endpoint_margin > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            margin=self.margin,
            endpoint_margin=self.endpoint_margin,
            supports=self.supports,
            endpoint_supports=self.endpoint_supports,
        )
        return d


def probe_field(fieldfn: GridFunction, order: int, t: float = 0.0) -> ConjectureProbe:
    if order not in (2, 3):
        raise ValidationError(f"probe order must be 2 or 3, got {order}")
    grid = fieldfn.grid
    der = np.abs(derivative(fieldfn.values, grid.dx, order))
    strip = grid.strip_mask()
    if not strip.any():
        raise StencilOutOfRange("grid has no nodes in the boundary strips")
    return ConjectureProbe(
        N=grid.N,
        t=float(t),
        order=order,
        boundary_max=float(der[strip].max()),
        global_max=float(der.max()),
        endpoint_max=float(max(der[0], der[-1])),
    )


def probe_times(t0: float = 1.0) -> np.ndarray:
    """Default probe times: the output grid without ``t = 0``.

    At ``t = 0`` the zero extension of ``u0`` has a jump in its second
    derivative at 0 and 1, so derivative probes there measure the kink.
    """
    return output_times(t0)[1:]


def _fp_trajectory(model, u0, N, t_grid, r) -> FieldTrajectory:
    disc = discretize_fp(model, N, r)
    u0grid = extend_initial(u0, N, disc.grid, allow_invalid=not u0.admissible)
    _, v0, _ = initial_pair(u0grid, N)
    times = np.union1d([0.0], np.asarray(t_grid, dtype=float))
    return solve_fp(disc, v0, times)


def probe_derivative_conjecture(
    model: RateModel,
    u0: InitialFunction,
    N: int,
    t_grid,
    order: int,
    r: int = 8,
    trajectory: FieldTrajectory | None = None,
) -> list[ConjectureProbe]:
    """Probe where ``|d^order u / dz^order|`` peaks along the PDE flow.

    Only the requested times are probed (``t = 0`` included if asked for).
    Whether ``u0`` meets the extra order-3 hypothesis is available from
    :meth:`InitialFunction.third_derivative_match`.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    traj = trajectory if trajectory is not None else _fp_trajectory(model, u0, N, t_grid, r)
    probes = []
    for t in t_grid:
        i = int(np.argmin(np.abs(traj.times - t)))
        if abs(traj.times[i] - t) > 1e-12:
            raise ValidationError(f"trajectory has no field at t={t}")
        probes.append(probe_field(traj.at(i), order, t))
    return probes


@dataclass
class BoundaryDecay:
    Ns: list[int]
    strip_max: list[float]
    slope: float | None
    intercept: float | None
    r2: float | None
    notes: list[str] = field(default_factory=list)

    @property
    def supports(self) -> bool:
        return self.slope is not None and self.slope <= -0.9

    def to_dict(self) -> dict:
        return {
            "Ns": self.Ns,
            "strip_max_second_derivative": self.strip_max,
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "supports": self.supports,
            "notes": self.notes,
        }


def boundary_decay_from_fields(fields_by_N: dict[int, list[GridFunction]]) -> BoundaryDecay:
    Ns = sorted(fields_by_N)
    maxima = []
    for N in Ns:
        m = 0.0
        for f in fields_by_N[N]:
            m = max(m, probe_field(f, 2).boundary_max)
        maxima.append(m)
    notes = []
    try:
        slope, intercept, r2 = fit_order(list(zip(Ns, maxima)))
    except ValidationError as exc:
        slope = intercept = r2 = None
        notes.append(f"no fit: {exc}")
    return BoundaryDecay(Ns, maxima, slope, intercept, r2, notes)


def probe_boundary_decay(
    model: RateModel,
    u0: InitialFunction,
    N_list,
    t_grid,
    r: int = 8,
    trajectories: dict[int, FieldTrajectory] | None = None,
) -> BoundaryDecay:
    """Slope of ``log max_{strips, t} |u''|`` against ``log N``."""
    N_list = [int(n) for n in N_list]
    if len(N_list) < 3:
        raise ValidationError("the boundary-decay probe needs at least 3 values of N")
    t_grid = np.asarray(t_grid, dtype=float)
    fields = {}
    for N in N_list:
        traj = trajectories.get(N) if trajectories else None
        if traj is None:
            traj = _fp_trajectory(model, u0, N, t_grid, r)
        fields[N] = [traj.at(int(np.argmin(np.abs(traj.times - t)))) for t in t_grid]
    return boundary_decay_from_fields(fields)


@dataclass
class ContractionReport:
    d: float
    norm: str
    passed: bool
    times: np.ndarray = field(repr=False)
    scaled: np.ndarray = field(repr=False)
    first_violation_time: float | None = None
    violation: float = 0.0
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "norm": self.norm,
            "passed": self.passed,
            "first_violation_time": self.first_violation_time,
            "violation": self.violation,
            "scaled": [float(v) for v in self.scaled],
            "note": self.note,
        }


def default_decay_rate(model: RateModel, N: int | None = None) -> float:
    return model.contraction_rate(N) + 0.01


def _norms(trajectory, norm: str, imag=None) -> np.ndarray:
    if isinstance(trajectory, DistributionTrajectory):
        if norm != "sup":
            raise ValidationError("only the sup norm applies to chain trajectories")
        re = trajectory.states
        mod = np.abs(re) if imag is None else np.hypot(re, imag.states)
        return mod.reshape(len(trajectory.times), -1).max(axis=1)
    if isinstance(trajectory, FieldTrajectory):
        out = []
        for i in range(len(trajectory.times)):
            u = trajectory.fields[i]
            if imag is not None:
                raise ValidationError("complex field trajectories are not supported")
            val = np.max(np.abs(u))
            if norm == "c1":
                val += np.max(np.abs(derivative(u, trajectory.grid.dx, 1)))
            elif norm != "sup":
                raise ValidationError(f"unknown norm {norm!r}")
            out.append(val)
        return np.array(out)
    raise ValidationError(f"cannot check contraction of {type(trajectory).__name__}")


def check_contraction(
    model: RateModel,
    trajectory,
    d: float | None = None,
    norm: str = "sup",
    slack: float = 1e-6,
    imag: DistributionTrajectory | None = None,
) -> ContractionReport:
    """Check that ``exp(-d t) ||v(t)||`` never increases on the output grid.

    ``imag`` carries the imaginary part of a complex initial vector solved
    as a second real trajectory. An increase counts as a violation when it
    exceeds ``slack`` relative to the previous value.
    """
    if d is None:
        N = trajectory.grid.N if isinstance(trajectory, FieldTrajectory) else None
        d = default_decay_rate(model, N)
    if d < 0:
        raise ValidationError("decay rate d must be non-negative")
    times = np.asarray(trajectory.times)
    scaled = np.exp(-d * times) * _norms(trajectory, norm, imag)
    inc = np.diff(scaled) - slack * scaled[:-1]
    bad = np.nonzero(inc > 0)[0]
    if bad.size:
        i = int(bad[0])
        note = "" if d > 0 else "d = 0 is below the proven threshold; growth of the sup norm is expected"
        return ContractionReport(d, norm, False, times, scaled, float(times[i + 1]), float(np.diff(scaled)[i]), note)
    return ContractionReport(d, norm, True, times, scaled)


def smallest_passing_rate(model: RateModel, trajectory: FieldTrajectory, norm: str = "c1", max_doublings: int = 12) -> float | None:
    """First ``d`` in ``{D, 2D, 4D, ...}`` that passes, D the default rate."""
    base = default_decay_rate(model, trajectory.grid.N)
    for k in range(max_doublings + 1):
        d = base * 2**k
        if check_contraction(model, trajectory, d, norm).passed:
            return d
    return None


THRESHOLDS = {2: -1.8, 3: -2.7}


@dataclass
class ConditionalOrderReport:
    claimed_order: int
    threshold: float
    report: ConvergenceReport
    interior_defect_slope: float | None = None

    @property
    def consistent(self) -> bool:
        return self.report.fitted_order is not None and self.report.fitted_order <= self.threshold

    @property
    def annotation(self) -> str:
        cond = "second-derivative conjecture" if self.claimed_order == 2 else "second/third-derivative and strip-decay conjectures"
        verdict = "consistent with" if self.consistent else "does not reach"
        return (
            f"fitted order {self.report.fitted_order:.3f} {verdict} the order-{self.claimed_order} "
            f"rate conditional on the {cond}; threshold {self.threshold}"
        )

    def to_dict(self, timings: bool = True) -> dict:
        return {
            "claimed_order": self.claimed_order,
            "threshold": self.threshold,
            "consistent": self.consistent,
            "annotation": self.annotation,
            "interior_defect_slope": self.interior_defect_slope,
            "report": self.report.to_dict(timings),
        }


def conditional_order_experiment(
    model: RateModel,
    u0: InitialFunction,
    N_list,
    t0: float = 1.0,
    claimed_order: int = 2,
    r: int = 8,
    report: ConvergenceReport | None = None,
    jobs: int = 1,
) -> ConditionalOrderReport:
    """Re-read a convergence run against a conditional higher-order claim.

    Purely observational. For ``claimed_order = 3`` the interior defect slope
    for ``f = u0`` is recorded too, since that claim leans on an order-2
    interior generator defect.
    """
    if claimed_order not in THRESHOLDS:
        raise ValidationError(f"claimed order must be 2 or 3, got {claimed_order}")
    if report is None:
        report = run_convergence(model, u0, t0, N_list, r, jobs)
    interior = None
    if claimed_order == 3:
        interior = defect_order_study(model, u0.u0_coeffs, report.Ns).slopes["interior"]
    return ConditionalOrderReport(claimed_order, THRESHOLDS[claimed_order], report, interior)
