"""Exact-event (Gillespie) simulation of the one-step process.

Randomness is counter based. Path ``i`` gets the key ``mix64(seed ^ i)`` and
its ``j``-th uniform is

    u_j = (mix64(key + (j + 1) * GOLDEN) >> 11) * 2**-53,

with ``mix64`` the SplitMix64 finaliser. Counter 0 draws the initial state
(when an initial distribution is given), event ``e`` uses counters
``1 + 2e`` (waiting time) and ``2 + 2e`` (direction). A path's result depends
only on ``(seed, i)``, so chunking or reordering paths changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, ValidationError
from .fitting import fit_order
from .rates import RateModel

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1
CHUNK = 1 << 17


def mix64(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64).copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def path_keys(seed: int, index) -> np.ndarray:
    return mix64(np.uint64(seed & MASK64) ^ np.asarray(index, dtype=np.uint64))


def uniforms(keys, counters) -> np.ndarray:
    """Uniforms in [0, 1) for each ``(key, counter)`` pair."""
    c = np.asarray(counters, dtype=np.uint64) + np.uint64(1)
    bits = mix64(np.asarray(keys, dtype=np.uint64) + c * GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class SsaConfig:
    N: int
    t_end: float
    n_paths: int
    seed: int = 0
    k0: int | None = 0
    initial: tuple[float, ...] | None = None
    checkpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"N must be a positive integer, got {self.N!r}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValidationError(f"n_paths must be >= 1, got {self.n_paths!r}")
        if not self.t_end >= 0:
            raise ValidationError(f"t_end must be non-negative, got {self.t_end}")
        if not 0 <= self.seed <= MASK64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.initial is None:
            if self.k0 is None or not 0 <= self.k0 <= self.N:
                raise ValidationError(f"k0 must lie in 0..{self.N}, got {self.k0}")
        else:
            p = np.asarray(self.initial, dtype=float)
            if p.shape != (self.N + 1,):
                raise LengthMismatch(f"initial distribution needs {self.N + 1} entries")
            if np.any(p < 0) or not p.sum() > 0:
                raise ValidationError("initial distribution must be non-negative with positive mass")
        if any(not 0 <= c <= self.t_end for c in self.checkpoints):
            raise ValidationError("checkpoints must lie in [0, t_end]")


@dataclass(frozen=True)
class EmpiricalDistribution:
    counts: np.ndarray = field(repr=False)
    n_paths: int
    t: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if np.any(c < 0) or int(c.sum()) != self.n_paths:
            raise ValidationError("counts must be non-negative and sum to n_paths")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def N(self) -> int:
        return self.counts.size - 1

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.n_paths

    def mean(self) -> float:
        return float(self.probabilities @ np.arange(self.N + 1))


def _initial_states(cfg: SsaConfig, keys) -> np.ndarray:
    if cfg.initial is None:
        return np.full(keys.size, cfg.k0, dtype=np.int64)
    cdf = np.cumsum(cfg.initial, dtype=float)
    u = uniforms(keys, np.zeros(keys.size, dtype=np.uint64)) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), cfg.N).astype(np.int64)


def _simulate_chunk(up, down, cfg: SsaConfig, marks: np.ndarray, index: np.ndarray) -> np.ndarray:
    """States of the given paths at each time in ``marks`` (shape marks x paths)."""
    keys = path_keys(cfg.seed, index)
    n = index.size
    k = _initial_states(cfg, keys)
    t = np.zeros(n)
    events = np.zeros(n, dtype=np.uint64)
    nxt = np.zeros(n, dtype=np.int64)  # next mark to record per path
    out = np.empty((marks.size, n), dtype=np.int64)
    live = np.arange(n)
    while live.size:
        kk = k[live]
        a, c = up[kk], down[kk]
        rate = a + c
        e = events[live]
        u1 = uniforms(keys[live], 1 + 2 * e)
        u2 = uniforms(keys[live], 2 + 2 * e)
        with np.errstate(divide="ignore"):
            tn = t[live] - np.log1p(-u1) / rate
        # record every mark passed before the jump
        while True:
            nl = nxt[live]
            hit = nl < marks.size
            hit[hit] = marks[nl[hit]] < tn[hit]
            if not hit.any():
                break
            out[nl[hit], live[hit]] = kk[hit]
            nxt[live[hit]] += 1
        jump = nxt[live] < marks.size
        step = np.where(u2 * rate < a, 1, -1)
        idx = live[jump]
        k[idx] += step[jump]
        t[idx] = tn[jump]
        events[idx] += np.uint64(1)
        live = idx
    return out


def simulate_checkpoints(model: RateModel, cfg: SsaConfig, chunk: int = CHUNK) -> list[EmpiricalDistribution]:
    """Empirical laws at each checkpoint and at ``t_end``, in time order."""
    N = cfg.N
    z = np.arange(N + 1) / N
    up = N * model.A(z)
    down = N * model.C(z)
    up[-1] = 0.0
    down[0] = 0.0
    if np.any(up < 0) or np.any(down < 0):
        raise ValidationError(f"negative jump rate on the lattice for N={N}")
    marks = np.array(sorted(set(cfg.checkpoints) | {cfg.t_end}), dtype=float)
    counts = np.zeros((marks.size, N + 1), dtype=np.int64)
    for lo in range(0, cfg.n_paths, chunk):
        index = np.arange(lo, min(cfg.n_paths, lo + chunk), dtype=np.uint64)
        states = _simulate_chunk(up, down, cfg, marks, index)
        for i in range(marks.size):
            counts[i] += np.bincount(states[i], minlength=N + 1)
    return [EmpiricalDistribution(counts[i], cfg.n_paths, float(marks[i])) for i in range(marks.size)]


def simulate(model: RateModel, cfg: SsaConfig, chunk: int = CHUNK) -> EmpiricalDistribution:
    return simulate_checkpoints(model, cfg, chunk)[-1]


def tv_distance(emp: EmpiricalDistribution, p) -> float:
    p = np.asarray(p, dtype=float)
    if p.shape != emp.counts.shape:
        raise LengthMismatch(f"distribution of length {p.size} against {emp.counts.size} states")
    return float(0.5 * np.sum(np.abs(emp.probabilities - p)))


def noise_envelope(N: int, n_paths: int) -> float:
    """``3 sqrt((N+1)/n)``, the multinomial L1-deviation scale."""
    return 3.0 * np.sqrt((N + 1) / n_paths)


@dataclass
class TvLadder:
    n_paths: list[int]
    tv: list[float]
    slope: float
    r2: float
    replicates: int

    def to_dict(self) -> dict:
        return {"n_paths": self.n_paths, "tv": self.tv, "slope": self.slope, "r2": self.r2, "replicates": self.replicates}


def tv_ladder(
    model: RateModel,
    cfg: SsaConfig,
    p_exact,
    ladder=(1000, 10_000, 100_000),
    replicates: int = 4,
) -> TvLadder:
    """Mean TV distance per ensemble size and its log-log slope.

    Replicate ``j`` of rung ``n`` uses seed ``mix64(cfg.seed + j)`` so that
    the rungs are independent of one another and of ``cfg.seed`` itself.
    """
    tvs = []
    for n in ladder:
        vals = []
        for j in range(replicates):
            seed = int(mix64(np.uint64((cfg.seed + j) & MASK64)))
            seed = int(mix64(np.uint64(seed ^ n)))
            run = SsaConfig(cfg.N, cfg.t_end, int(n), seed, cfg.k0, cfg.initial)
            vals.append(tv_distance(simulate(model, run), p_exact))
        tvs.append(float(np.mean(vals)))
    slope, _, r2 = fit_order(list(zip(ladder, tvs)))
    return TvLadder([int(n) for n in ladder], tvs, slope, r2, replicates)
