"""Wiener-space laboratory: discretized Brownian paths, nonnegative
functionals (running maximum, reflection), conditioning above an iterated-
logarithm boundary, Monte Carlo sup-norm ball probabilities, and the
ramp improvement construction for centers.

Paths live on a uniform grid over [0, 1] and always start at 0.  Sampling
is driven by the per-sample substreams of ``_rng``: increment i of sample j
is a pure function of (seed, j, i), so estimates are bit-identical for any
chunking or worker count and different centers evaluated under one seed
share the identical path set (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ._rng import normal_quantile, sample_keys, uniform_block
from .mc import MCEstimate, chunk_ranges, map_chunks


@dataclass(frozen=True)
class PathGrid:
    """Uniform grid t_i = i/steps, i = 0..steps."""

    steps: int

    def __post_init__(self):
        if not (isinstance(self.steps, int) and self.steps >= 2):
            raise ValueError(f"steps must be an integer >= 2, got {self.steps}")

    def times(self) -> np.ndarray:
        return _times(self.steps)


@lru_cache(maxsize=32)
def _times(steps: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, steps + 1)
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class Path:
    """Function on a PathGrid with value 0 at t=0; used both for sampled
    paths and for ball centers."""

    grid: PathGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 1 or v.shape[0] != self.grid.steps + 1:
            raise ValueError(f"need {self.grid.steps + 1} values, got shape {v.shape}")
        if v[0] != 0.0:
            raise ValueError(f"paths start at 0, got values[0] = {v[0]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


CenterPath = Path
SamplePath = Path


def zero_center(grid: PathGrid) -> Path:
    return Path(grid, np.zeros(grid.steps + 1))


@dataclass(frozen=True)
class BoundaryFunction:
    """Iterated-logarithm lower boundary: rho(t) = -2 sqrt(2 t loglog(1/t))
    for 0 < t <= t0, rho(0) = 0, constant rho(t0) beyond t0."""

    t0: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.t0 < 1.0 / math.e:
            raise ValueError(f"t0 must lie in (0, 1/e), got {self.t0}")

    def __call__(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        scalar = np.isscalar(t)
        tc = np.minimum(np.asarray(t, dtype=np.float64), self.t0)
        out = np.zeros_like(tc)
        pos = tc > 0.0
        tp = tc[pos]
        out[pos] = -2.0 * np.sqrt(2.0 * tp * np.log(np.log(1.0 / tp)))
        if scalar:
            return float(out)
        return out


def lil_boundary(boundary: BoundaryFunction, t: float) -> float:
    """Boundary value at a single time in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return float(boundary(t))


@dataclass(frozen=True)
class Wiener:
    """Brownian motion on [0, 1] started at 0."""


@dataclass(frozen=True)
class RunningMax:
    """Law of t -> max of Brownian motion on [0, t]."""


@dataclass(frozen=True)
class ReflectedWiener:
    """Law of t -> |Brownian motion at t|."""


@dataclass(frozen=True)
class ConditionedWiener:
    """Brownian motion conditioned to stay above the boundary at every grid
    time, realized by rejection sampling with a per-sample try cap."""

    boundary: BoundaryFunction
    max_tries: int = 1_000_000

    def __post_init__(self):
        if not (isinstance(self.max_tries, int) and self.max_tries >= 1):
            raise ValueError(f"max_tries must be a positive integer, got {self.max_tries}")


PathLaw = Union[Wiener, RunningMax, ReflectedWiener, ConditionedWiener]


class RejectionError(RuntimeError):
    """Rejection sampling exhausted max_tries for some sample."""

    def __init__(self, accepted: int, tries: int):
        self.accepted = accepted
        self.tries = tries
        self.acceptance_rate = accepted / tries if tries else 0.0
        super().__init__(
            f"rejection sampling exhausted max_tries: accepted {accepted} of "
            f"{tries} tries (empirical acceptance rate {self.acceptance_rate:.6g})"
        )


def _wiener_chunk(grid: PathGrid, seed: int, lo: int, hi: int) -> np.ndarray:
    """Sampled Brownian values, shape (hi-lo, steps+1); increment i of
    sample j is normal_quantile of draw i from substream (seed, j)."""
    n_steps = grid.steps
    keys = sample_keys(seed, lo, hi)
    z = normal_quantile(uniform_block(keys, 0, n_steps))
    z *= n_steps ** -0.5
    out = np.zeros((hi - lo, n_steps + 1))
    np.cumsum(z, axis=1, out=out[:, 1:])
    return out


def _conditioned_chunk(law: ConditionedWiener, grid: PathGrid, seed: int,
                       lo: int, hi: int) -> tuple[np.ndarray, int]:
    """Rejection sampling; try m of sample j consumes draws [m*steps, (m+1)*steps)
    of substream (seed, j), so accepted paths do not depend on chunking."""
    n_steps = grid.steps
    rho_inner = law.boundary(grid.times()[1:])
    keys = sample_keys(seed, lo, hi)
    n = hi - lo
    vals = np.zeros((n, n_steps + 1))
    pending = np.arange(n)
    offsets = np.zeros(n, dtype=np.uint64)
    tries = 0
    rounds = 0
    while pending.size:
        if rounds >= law.max_tries:
            raise RejectionError(accepted=n - pending.size, tries=tries)
        u = uniform_block(keys[pending], offsets[pending], n_steps)
        z = normal_quantile(u)
        z *= n_steps ** -0.5
        w = np.cumsum(z, axis=1)
        ok = np.all(w >= rho_inner[None, :], axis=1)  # t=0: 0 >= rho(0)=0 always
        tries += pending.size
        vals[pending[ok], 1:] = w[ok]
        offsets[pending] += np.uint64(n_steps)
        pending = pending[~ok]
        rounds += 1
    return vals, tries


def _law_chunk(law: PathLaw, grid: PathGrid, seed: int, lo: int, hi: int
               ) -> tuple[np.ndarray, int]:
    """(values, wiener tries) for samples lo..hi-1 of the law."""
    if isinstance(law, ConditionedWiener):
        return _conditioned_chunk(law, grid, seed, lo, hi)
    w = _wiener_chunk(grid, seed, lo, hi)
    if isinstance(law, RunningMax):
        return np.maximum.accumulate(w, axis=1), hi - lo
    if isinstance(law, ReflectedWiener):
        return np.abs(w), hi - lo
    if isinstance(law, Wiener):
        return w, hi - lo
    raise TypeError(f"not a path law: {law!r}")


def sample_wiener(grid: PathGrid, seed: int, index: int = 0) -> Path:
    """One Brownian path: cumulative sum of N(0, 1/steps) increments."""
    return Path(grid, _wiener_chunk(grid, seed, index, index + 1)[0])


def sample_law(law: PathLaw, grid: PathGrid, seed: int, index: int = 0) -> Path:
    """One sample of the law; conditioned laws may raise RejectionError."""
    vals, _ = _law_chunk(law, grid, seed, index, index + 1)
    return Path(grid, vals[0])


def running_max(path: Path) -> Path:
    """Prefix maximum; nondecreasing and >= the input at every grid point."""
    return Path(path.grid, np.maximum.accumulate(path.values))


def reflect(path: Path) -> Path:
    """Pointwise absolute value."""
    return Path(path.grid, np.abs(path.values))


def sup_distance(path: Path, center: Path) -> float:
    """Sup-norm distance on the shared grid."""
    if path.grid != center.grid:
        raise ValueError(f"grid mismatch: {path.grid} vs {center.grid}")
    return float(np.max(np.abs(path.values - center.values)))


def _path_chunk(steps: int) -> int:
    # ~8M doubles per chunk keeps memory modest; fixed formula so chunking
    # (and hence nothing at all) depends on worker count
    return max(16, min(4096, 8_000_000 // (steps + 1)))


def _mc_hits(law: PathLaw, center_values: Sequence[np.ndarray], r: float,
             grid: PathGrid, n: int, seed: int, workers: int = 1
             ) -> tuple[list[int], list[int], int]:
    """Hits per center on one common sample set, dominance violations for
    consecutive center pairs (hit for i-th but miss for (i+1)-th), and the
    total Wiener tries consumed."""
    mats = [np.asarray(c, dtype=np.float64) for c in center_values]

    def run(lo: int, hi: int):
        vals, tries = _law_chunk(law, grid, seed, lo, hi)
        flags = [np.max(np.abs(vals - c[None, :]), axis=1) <= r for c in mats]
        hits = [int(f.sum()) for f in flags]
        viol = [int(np.sum(flags[i] & ~flags[i + 1])) for i in range(len(flags) - 1)]
        return hits, viol, tries

    parts = map_chunks(run, chunk_ranges(n, _path_chunk(grid.steps)), workers)
    hits = [sum(p[0][i] for p in parts) for i in range(len(mats))]
    viol = [sum(p[1][i] for p in parts) for i in range(max(0, len(mats) - 1))]
    tries = sum(p[2] for p in parts)
    return hits, viol, tries


def mc_ball_prob(law: PathLaw, center: Path, r: float, grid: PathGrid, n: int,
                 seed: int, workers: int = 1) -> MCEstimate:
    """Fraction of sampled paths within sup-distance r of the center."""
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    if center.grid != grid:
        raise ValueError("center grid does not match the sampling grid")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"sample count must be a positive integer, got {n}")
    hits, _, _ = _mc_hits(law, [center.values], r, grid, int(n), seed, workers)
    return MCEstimate.from_hits(hits[0], int(n), int(seed))


@dataclass(frozen=True)
class PairedBallComparison:
    """Two centers evaluated on the identical path set."""

    first: MCEstimate
    second: MCEstimate
    dominance_violations: int  # paths inside the first ball but outside the second
    wiener_tries: int

    @property
    def paired_delta(self) -> float:
        return self.second.p_hat - self.first.p_hat


def compare_centers(law: PathLaw, first: Path, second: Path, r: float,
                    grid: PathGrid, n: int, seed: int, workers: int = 1
                    ) -> PairedBallComparison:
    """Common-random-number comparison of two centers' ball probabilities."""
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    if first.grid != grid or second.grid != grid:
        raise ValueError("center grids must match the sampling grid")
    hits, viol, tries = _mc_hits(law, [first.values, second.values], r, grid,
                                 int(n), seed, workers)
    return PairedBallComparison(
        first=MCEstimate.from_hits(hits[0], int(n), int(seed)),
        second=MCEstimate.from_hits(hits[1], int(n), int(seed)),
        dominance_violations=viol[0],
        wiener_tries=tries,
    )


Ceiling = Callable[[Union[float, np.ndarray]], Union[float, np.ndarray]]


def ceiling_for(law: PathLaw, r: float) -> Ceiling:
    """Per-time ceiling b for the improvement construction: r for the
    nonnegative laws, boundary + r for the conditioned law."""
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    if isinstance(law, ConditionedWiener):
        boundary = law.boundary
        return lambda t: boundary(t) + r
    if isinstance(law, (RunningMax, ReflectedWiener)):
        return lambda t: np.asarray(t, dtype=np.float64) * 0.0 + r
    raise ValueError("law has full support; the ceiling construction does not apply")


def improve_center(center: Path, r: float, s: float,
                   ceiling: Optional[Ceiling] = None) -> Path:
    """Raise the center toward the ceiling on (0, s), keep it unchanged on
    [s, 1]: new(t) = max(center(t), min(b(t), beta*t)) with beta = 2 b(s/2)/s.

    Every path within r of the old center that also satisfies the law's
    support constraint (>= 0, resp. >= boundary) stays within r of the new
    center, so with common random numbers the hit indicator never drops.
    The center must have positive ball probability for the improvement to
    mean anything; that is the caller's responsibility.
    """
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if ceiling is None:
        rr = r
        ceiling = lambda t: np.asarray(t, dtype=np.float64) * 0.0 + rr
    t = center.grid.times()
    b = np.asarray(ceiling(t), dtype=np.float64)
    inside = (t > 0.0) & (t < s)
    if not np.any(inside):
        raise ValueError(f"no grid times strictly inside (0, {s}); refine the grid")
    if not np.any(center.values[inside] < b[inside]):
        raise ValueError("center touches the ceiling everywhere on (0, s); no room to improve")
    beta = 2.0 * float(ceiling(0.5 * s)) / s
    new = np.array(center.values, copy=True)
    new[inside] = np.maximum(new[inside], np.minimum(b[inside], beta * t[inside]))
    if not np.any(new[inside] > center.values[inside]):
        raise ValueError("construction produced no strict increase on (0, s)")
    return Path(center.grid, new)


def ramp_center(grid: PathGrid, ceiling: Ceiling, s: float,
                knot_fraction: float = 0.5) -> Path:
    """Center that climbs 0 -> ceiling over [0, s] and rides the ceiling
    thereafter: min(b(t), beta*t) with the slope chosen so the ramp meets
    the ceiling at knot_fraction * s."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if not 0.0 < knot_fraction < 1.0:
        raise ValueError(f"knot fraction must lie in (0, 1), got {knot_fraction}")
    knot = knot_fraction * s
    b_knot = float(ceiling(knot))
    if not b_knot > 0.0:
        raise ValueError(f"ceiling must be positive at the ramp knot, got {b_knot}")
    t = grid.times()
    vals = np.minimum(np.asarray(ceiling(t), dtype=np.float64), (b_knot / knot) * t)
    vals[0] = 0.0
    return Path(grid, vals)
