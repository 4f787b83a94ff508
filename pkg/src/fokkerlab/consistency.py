"""Generator defect between the chain and the Fokker-Planck operator.

For a polynomial ``f`` the defect at lattice point ``k`` is

    (A_N P_N f)_k - (P_N G_N f)_k,   G_N f = ((A+C) f)'' / 2N - ((A-C) f)',

where ``P_N`` samples at ``k/N``. Both sides are evaluated exactly (the
continuous side by polynomial calculus), so the measured defect is pure
discretisation defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DegenerateFit, LengthMismatch, ValidationError
from .fitting import fit_order
from .master import TridiagonalGenerator, build_generator
from .rates import SAMPLES, RateModel, polyder, polyval

BC_TOL = 1e-10


def apply_discrete_generator(gen: TridiagonalGenerator, f_lattice) -> np.ndarray:
    f_lattice = np.asarray(f_lattice, dtype=float)
    if f_lattice.shape != (gen.N + 1,):
        raise LengthMismatch(f"need {gen.N + 1} lattice values, got shape {f_lattice.shape}")
    return gen.apply(f_lattice)


def _products(model: RateModel, f) -> tuple[np.ndarray, np.ndarray]:
    f = np.asarray(f, dtype=float)
    return P.polymul(model.coeffs("A+C"), f), P.polymul(model.coeffs("A-C"), f)


def apply_continuous_generator(model: RateModel, N: int, f, z=None) -> np.ndarray:
    """``((A+C) f)'' / 2N - ((A-C) f)'`` at the lattice points (or at ``z``)."""
    F1, F2 = _products(model, f)
    z = np.arange(N + 1) / N if z is None else np.asarray(z, dtype=float)
    return polyval(polyder(F1, 2), z) / (2 * N) - polyval(polyder(F2, 1), z)


def boundary_residuals(model: RateModel, N: int, f) -> tuple[float, float]:
    """Zero-flux residuals ``((A+C) f)'/2N - (A-C) f`` at ``-h`` and ``1+h``."""
    F1, F2 = _products(model, f)
    h = 0.5 / N
    ends = np.array([-h, 1 + h])
    res = polyval(polyder(F1, 1), ends) / (2 * N) - polyval(F2, ends)
    return float(res[0]), float(res[1])


def c2_norm(coeffs, lo: float, hi: float) -> float:
    """``||g|| + ||g'|| + ||g''||`` sampled on a 10^4-point grid."""
    z = np.linspace(lo, hi, SAMPLES)
    return float(sum(np.max(np.abs(polyval(polyder(coeffs, k), z))) for k in range(3)))


@dataclass(frozen=True)
class DefectReport:
    N: int
    defect_all: float
    defect_interior: float
    defect_boundary: float
    per_k: np.ndarray | None = field(default=None, repr=False)
    in_domain: bool = False
    bc_residuals: tuple[float, float] = (0.0, 0.0)
    c2_bound: float = float("nan")

    @property
    def c0_estimate(self) -> float:
        """``N * defect_all / (||(A+C) f||_C2 + ||(A-C) f||_C2)``."""
        if not self.c2_bound > 0:
            return float("nan")
        return self.N * self.defect_all / self.c2_bound

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "defect_all": self.defect_all,
            "defect_interior": self.defect_interior,
            "defect_boundary": self.defect_boundary,
            "in_domain": self.in_domain,
            "bc_residuals": list(self.bc_residuals),
            "c0_estimate": self.c0_estimate,
        }


def generator_defect(model: RateModel, N: int, f, region: str = "all", keep_per_k: bool = False) -> DefectReport:
    """Componentwise defect, split into interior rows and the two end rows.

    ``region`` only selects which maximum is reported as the headline in
    callers; every field of the report is always filled. Membership of ``f``
    in the operator domain (zero-flux at both ends) is checked to
    ``BC_TOL`` and reported, not enforced.
    """
    if region not in ("all", "interior"):
        raise ValidationError(f"region must be 'all' or 'interior', got {region!r}")
    gen = build_generator(model, N)
    z = np.arange(N + 1) / N
    disc = apply_discrete_generator(gen, polyval(f, z))
    cont = apply_continuous_generator(model, N, f)
    d = np.abs(disc - cont)
    interior = float(d[1:-1].max()) if N >= 2 else 0.0
    boundary = float(max(d[0], d[-1]))
    res = boundary_residuals(model, N, f)
    F1, F2 = _products(model, f)
    h = 0.5 / N
    bound = c2_norm(F1, -h, 1 + h) + c2_norm(F2, -h, 1 + h)
    return DefectReport(
        N=N,
        defect_all=max(interior, boundary),
        defect_interior=interior,
        defect_boundary=boundary,
        per_k=d if keep_per_k else None,
        in_domain=max(abs(res[0]), abs(res[1])) <= BC_TOL,
        bc_residuals=res,
        c2_bound=bound,
    )


@dataclass
class DefectStudy:
    reports: list[DefectReport]
    slopes: dict[str, float | None]
    r2: dict[str, float | None]
    flags: list[str]

    @property
    def c0_estimates(self) -> list[float]:
        return [r.c0_estimate for r in self.reports]

    def to_dict(self) -> dict:
        c0 = self.c0_estimates
        return {
            "slopes": self.slopes,
            "r2": self.r2,
            "flags": self.flags,
            "c0_estimates": c0,
            "c0_max": max(c0),
            "reports": [r.to_dict() for r in self.reports],
        }


def defect_order_study(model: RateModel, f, N_list) -> DefectStudy:
    N_list = [int(n) for n in N_list]
    if len(N_list) < 3:
        raise DegenerateFit("a defect study needs at least 3 values of N")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValidationError("N_list must be strictly increasing")
    reports = [generator_defect(model, N, f) for N in N_list]
    slopes: dict[str, float | None] = {}
    r2: dict[str, float | None] = {}
    flags = []
    for region in ("all", "interior", "boundary"):
        pts = [(r.N, getattr(r, f"defect_{region}")) for r in reports]
        kept = [p for p in pts if p[1] > 0]
        if len(kept) < len(pts):
            flags.append(f"{region}: {len(pts) - len(kept)} zero defects excluded from fit")
        try:
            s, _, q = fit_order(kept)
        except ValidationError:
            flags.append(f"{region}: too few non-zero defects to fit")
            s = q = None
        slopes[region] = s
        r2[region] = q
    if not all(r.in_domain for r in reports):
        flags.append("f does not satisfy the zero-flux boundary conditions; the O(1/N) defect bound does not cover the boundary rows")
    return DefectStudy(reports, slopes, r2, flags)
