"""Chain-versus-PDE comparison across a ladder of N."""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateFit, ValidationError
from .fitting import fit_order
from .fpde import FieldTrajectory, discretize_fp, solve_fp
from .master import DistributionTrajectory, build_generator, initial_pair, solve_master
from .rates import InitialFunction, RateModel, extend_initial, validate_rate_model

OUTPUT_POINTS = 21
MEAN_FIELD_DT = 1e-4

__all__ = [
    "PairResult",
    "LadderEntry",
    "ConvergenceReport",
    "run_pair",
    "run_convergence",
    "synthetic_report",
    "mean_field",
    "mean_field_gap",
    "fit_order",
    "config_digest",
]


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def output_times(t0: float, n: int = OUTPUT_POINTS) -> np.ndarray:
    return np.linspace(0.0, t0, n)


def mean_field(model: RateModel, x0: float, t_grid, dt: float = MEAN_FIELD_DT) -> np.ndarray:
    """RK4 for ``x' = A(x) - C(x)``, reported on ``t_grid``."""
    if not 0.0 <= x0 <= 1.0:
        raise ValidationError(f"x0 must lie in [0, 1], got {x0}")
    t_grid = np.asarray(t_grid, dtype=float)
    drift = np.asarray(model.coeffs("A-C"))

    def f(x):
        return np.polynomial.polynomial.polyval(x, drift)

    out = np.empty(t_grid.size)
    x, t = float(x0), 0.0
    for i, target in enumerate(t_grid):
        span = target - t
        if span > 0:
            n = max(1, math.ceil(span / dt - 1e-9))
            h = span / n
            for _ in range(n):
                k1 = f(x)
                k2 = f(x + 0.5 * h * k1)
                k3 = f(x + 0.5 * h * k2)
                k4 = f(x + h * k3)
                x += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        out[i] = x
        t = target
    return out


def mean_field_gap(model: RateModel, N: int, t_grid, x0: float = 0.1) -> float:
    """``max_t |x(t) - sum_k (k/N) p_k(t)|`` for the chain started at ``round(x0 N)``.

    A point-mass start is used because for a spread-out initial law the
    mean of a nonlinear chain leaves the mean-field curve at order one.
    """
    k0 = int(round(x0 * N))
    p0 = np.zeros(N + 1)
    p0[k0] = 1.0
    traj = solve_master(build_generator(model, N), p0, t_grid)
    mf = mean_field(model, k0 / N, t_grid)
    return float(np.max(np.abs(mf - traj.means())))


@dataclass(eq=False)
class PairResult:
    N: int
    times: np.ndarray
    errors: np.ndarray
    QN: float
    master: DistributionTrajectory = field(repr=False)
    fp: FieldTrajectory = field(repr=False)
    seconds: float = 0.0

    @property
    def unnormalized_errors(self) -> np.ndarray:
        """``max_k |u(t, k/N) - q_k(t)|``, the unscaled comparison."""
        return self.QN * self.errors


def run_pair(
    model: RateModel,
    u0: InitialFunction,
    N: int,
    t_grid,
    r: int = 8,
    allow_invalid: bool = False,
) -> PairResult:
    """Solve the chain and the PDE from matching data and compare on the lattice."""
    start = time.perf_counter()
    t_grid = np.asarray(t_grid, dtype=float)
    disc = discretize_fp(model, N, r)
    u0grid = extend_initial(u0, N, disc.grid, allow_invalid=allow_invalid)
    p0, v0, QN = initial_pair(u0grid, N)
    master = solve_master(build_generator(model, N), p0, t_grid)
    fp = solve_fp(disc, v0, t_grid)
    errors = np.max(np.abs(fp.lattice(N) - master.states), axis=1)
    return PairResult(N, t_grid, errors, QN, master, fp, time.perf_counter() - start)


@dataclass
class LadderEntry:
    N: int
    sup_error: float
    error_at_t0: float
    seconds: float
    QN: float
    unnormalized_sup_error: float
    mean_field_gap: float
    errors: list[float] = field(default_factory=list)


@dataclass
class ConvergenceReport:
    label: str
    t0: float
    entries: list[LadderEntry]
    fitted_order: float | None
    intercept: float | None
    r2: float | None
    digest: str
    admissible_u0: bool = True
    notes: list[str] = field(default_factory=list)
    pairs: dict[int, PairResult] = field(default_factory=dict, repr=False)

    @property
    def K(self) -> float:
        """``max_N N * e_N`` over the ladder."""
        return max(e.N * e.sup_error for e in self.entries)

    @property
    def Ns(self) -> list[int]:
        return [e.N for e in self.entries]

    def predicted_error(self, N: float) -> float:
        return float(math.exp(self.intercept) * N**self.fitted_order)

    def to_dict(self, timings: bool = True) -> dict:
        entries = []
        for e in self.entries:
            d = asdict(e)
            if not timings:
                d["seconds"] = None
            entries.append(d)
        return {
            "label": self.label,
            "t0": self.t0,
            "fitted_order": self.fitted_order,
            "intercept": self.intercept,
            "r2": self.r2,
            "K": self.K,
            "admissible_u0": self.admissible_u0,
            "notes": list(self.notes),
            "digest": self.digest,
            "entries": entries,
        }


def _ladder_entry(args) -> tuple[LadderEntry, PairResult | None]:
    model, u0, N, t_grid, r, allow_invalid, keep = args
    pair = run_pair(model, u0, N, t_grid, r, allow_invalid)
    gap = mean_field_gap(model, N, t_grid)
    entry = LadderEntry(
        N=N,
        sup_error=float(pair.errors.max()),
        error_at_t0=float(pair.errors[-1]),
        seconds=pair.seconds,
        QN=pair.QN,
        unnormalized_sup_error=float(pair.unnormalized_errors.max()),
        mean_field_gap=gap,
        errors=[float(v) for v in pair.errors],
    )
    return entry, (pair if keep else None)


def _fit(entries) -> tuple[float, float, float]:
    return fit_order([(e.N, e.sup_error) for e in entries])


def run_convergence(
    model: RateModel,
    u0: InitialFunction,
    t0: float = 1.0,
    N_list=(50, 100, 200, 400),
    r: int = 8,
    jobs: int = 1,
    keep_pairs: bool = False,
) -> ConvergenceReport:
    """Sup-over-time lattice errors for each N and the fitted log-log order.

    A ``u0`` that violates the boundary assumptions is still run, but the
    report is flagged as non-admissible. With ``keep_pairs`` the solved
    trajectories are kept on ``report.pairs`` for post-processing.
    """
    N_list = [int(n) for n in N_list]
    if len(N_list) < 3:
        raise DegenerateFit(f"a convergence ladder needs at least 3 values of N, got {len(N_list)}")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValidationError("N_list must be strictly increasing")
    if not t0 > 0:
        raise ValidationError(f"t0 must be positive, got {t0}")
    validate_rate_model(model)
    bad = u0.violations()
    t_grid = output_times(t0)
    tasks = [(model, u0, N, t_grid, r, bool(bad), keep_pairs) for N in N_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ladder_entry, tasks))
    else:
        results = [_ladder_entry(t) for t in tasks]
    entries = [e for e, _ in results]
    pairs = {e.N: p for e, p in results if p is not None}
    slope, intercept, r2 = _fit(entries)
    digest = config_digest(
        {
            "a": model.a_coeffs,
            "c": model.c_coeffs,
            "eta": model.eta,
            "u0": u0.u0_coeffs,
            "t0": t0,
            "N": N_list,
            "r": r,
        }
    )
    notes = [f"non-admissible u0: {v}" for v in bad]
    return ConvergenceReport(model.label, t0, entries, slope, intercept, r2, digest, not bad, notes, pairs)


def synthetic_report(N_list, order: float = -1.0, scale: float = 1.0, label: str = "synthetic") -> ConvergenceReport:
    """A report built from exact power-law errors ``scale * N**order``."""
    entries = [
        LadderEntry(int(N), scale * N**order, scale * N**order, 0.0, float("nan"), float("nan"), float("nan"))
        for N in N_list
    ]
    slope, intercept, r2 = _fit(entries)
    digest = config_digest({"synthetic": list(map(int, N_list)), "order": order, "scale": scale})
    return ConvergenceReport(label, 1.0, entries, slope, intercept, r2, digest)
