"""Existence and non-existence experiments.

Exact modes on finite-dimensional truncations (where the objective
factorizes and the coordinatewise optimum is the global one), escape
diagnostics tracing the maximizing sequence of a product measure, and a
ramp-family hill climb over path-space centers with common random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from . import laws, paths, products
from .mc import MCEstimate
from .products import BoxShape, CoordinateSchedule, FiniteCenter, ProbBracket

ATTAINED = "attained-at-finite-center"
NON_ATTAINMENT = "non-attainment-suspected"


def finite_dim_mode(schedule: CoordinateSchedule, d: int, shape: BoxShape
                    ) -> tuple[FiniteCenter, float]:
    """Exact maximizer of the d-dimensional truncated ball probability.

    The objective is a product of per-coordinate factors, so maximizing
    each factor separately is globally optimal; the returned probability
    is the product of maximal factors.
    """
    if not (isinstance(d, int) and d >= 1):
        raise ValueError(f"dimension must be a positive integer, got {d}")
    vals = {}
    logs = []
    for k in range(1, d + 1):
        c, f = laws.argmax_center(schedule.law(k), shape.radius(k))
        vals[k] = c
        logs.append(math.log(f))
    return FiniteCenter.of(vals), math.exp(math.fsum(logs))


@dataclass(frozen=True)
class EscapeRow:
    """One maximizing-sequence element: its bracket, the gap to the sup,
    and the coordinate the improvement step modifies (None if optimal)."""

    n: int
    lower: float
    upper: float
    gap: float
    improved_coordinate: Optional[int]


@dataclass(frozen=True)
class EscapeReport:
    rows: tuple[EscapeRow, ...]
    sup: ProbBracket
    verdict: str

    def __post_init__(self):
        for a, b in zip(self.rows, self.rows[1:]):
            if b.lower < a.lower:
                raise ValueError(
                    f"bracket lower bounds must be nondecreasing in n "
                    f"(n={a.n}: {a.lower} -> n={b.n}: {b.lower})")


def _modified_coordinate(old: FiniteCenter, new: FiniteCenter) -> int:
    a, b = old.as_dict(), new.as_dict()
    changed = [k for k in set(a) | set(b) if a.get(k, 0.0) != b.get(k, 0.0)]
    if len(changed) != 1:
        raise AssertionError(f"improvement changed coordinates {sorted(changed)}")
    return changed[0]


def escape_diagnostic(schedule: CoordinateSchedule, shape: BoxShape, n_max: int,
                      K: int, normalized: bool = True) -> EscapeReport:
    """Trace ball probabilities along the maximizing sequence.

    Verdict is non-attainment-suspected when every tested element still
    admits a strict improvement at a coordinate beyond its support while
    the gaps to the sup bracket shrink; attained-at-finite-center as soon
    as some element is coordinatewise optimal up to K.  This is a heuristic
    certificate (strict improvement available at all tested centers), not
    a proof of non-attainment.
    """
    if not (isinstance(n_max, int) and n_max >= 1):
        raise ValueError(f"n_max must be a positive integer, got {n_max}")
    if not (isinstance(K, int) and K >= n_max):
        raise ValueError(f"need K >= n_max, got K={K}, n_max={n_max}")
    sup = products.sup_ball_prob(schedule, shape, K, normalized=normalized)
    rows = []
    attained = False
    for n in range(1, n_max + 1):
        x_n = products.maximizing_sequence_element(schedule, shape, n)
        br = products.ball_prob(schedule, x_n, shape, K, normalized=normalized)
        improved = products.improve_center(schedule, x_n, shape, K)
        if improved is None:
            attained = True
            k0 = None
        else:
            k0 = _modified_coordinate(x_n, improved)
        rows.append(EscapeRow(n=n, lower=br.lower, upper=br.upper,
                              gap=sup.upper - br.upper, improved_coordinate=k0))
    verdict = ATTAINED if attained else NON_ATTAINMENT
    return EscapeReport(rows=tuple(rows), sup=sup, verdict=verdict)


@dataclass(frozen=True)
class ClimbStep:
    """One ramp-family candidate: parameters (s, knot fraction), its paired
    estimate, and the best objective seen so far."""

    s: float
    knot_fraction: float
    estimate: MCEstimate
    best_so_far: float


@dataclass(frozen=True)
class ClimbHistory:
    steps: tuple[ClimbStep, ...]
    best_index: int

    def __post_init__(self):
        best = -math.inf
        for st in self.steps:
            if st.best_so_far < best:
                raise ValueError("best-so-far objective must be nondecreasing")
            best = st.best_so_far

    @property
    def best(self) -> ClimbStep:
        return self.steps[self.best_index]


def path_mode_search(law: paths.PathLaw, r: float, grid: paths.PathGrid,
                     ramp_times: Sequence[float], n: int, seed: int,
                     refine_knots: bool = False, workers: int = 1) -> ClimbHistory:
    """Evaluate the ramp-center family under common random numbers.

    For each s (strictly decreasing) the candidate climbs from 0 to the
    law's ceiling (r, or boundary + r) over [0, s] and rides it afterwards;
    all candidates are scored against the identical sampled path set.
    refine_knots adds knot fractions 0.25 and 0.75 beside the default 0.5.
    """
    rt = [float(s) for s in ramp_times]
    if not rt:
        raise ValueError("ramp_times must be nonempty")
    if any(not 0.0 < s < 1.0 for s in rt):
        raise ValueError(f"ramp times must lie in (0, 1), got {rt}")
    if any(b >= a for a, b in zip(rt, rt[1:])):
        raise ValueError(f"ramp times must be strictly decreasing, got {rt}")
    ceiling = paths.ceiling_for(law, r)
    knots = (0.25, 0.5, 0.75) if refine_knots else (0.5,)
    params = [(s, q) for s in rt for q in knots]
    centers = [paths.ramp_center(grid, ceiling, s, q) for s, q in params]
    hits, _, _ = paths._mc_hits(law, [c.values for c in centers], r, grid,
                                int(n), seed, workers)
    steps = []
    best = -math.inf
    best_index = 0
    for i, ((s, q), h) in enumerate(zip(params, hits)):
        est = MCEstimate.from_hits(h, int(n), int(seed))
        if est.p_hat > best:
            best = est.p_hat
            best_index = i
        steps.append(ClimbStep(s=s, knot_fraction=q, estimate=est, best_so_far=best))
    return ClimbHistory(steps=tuple(steps), best_index=best_index)
