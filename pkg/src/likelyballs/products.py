"""Infinite product measures on sequence space.

A CoordinateSchedule assigns a scalar law to every coordinate k >= 1; the
product measure lives on real sequences.  Sup-norm balls (and general
product-of-intervals boxes) around finitely supported centers have
probability equal to an infinite product of interval factors, which this
module brackets rigorously: finitely many factors are multiplied in log
space and the remaining tail is bounded below by preset-specific analytic
estimates.  Bracket endpoints are additionally inflated by a floating-point
rounding allowance, so the enclosure holds for the exact real-arithmetic
value, not just the computed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from . import laws
from ._rng import sample_keys, std_normal_cdf, uniform_block, uniform_stream
from .laws import Exponential, Gaussian, LowerTruncated, ScalarLaw
from .mc import MCEstimate, chunk_ranges, map_chunks

_EPS = 2.0 ** -52

EXP_K = "exp-k"
GAUSS_COND = "gauss-cond"
CUSTOM = "custom"


def _exp_k_rule(k: int) -> ScalarLaw:
    return Exponential(rate=float(k))


def _gauss_cond_rule(k: int) -> ScalarLaw:
    return LowerTruncated(base=Gaussian(0.0, 1.0 / k), lower=-1.0 / math.sqrt(k))


@dataclass(frozen=True)
class CoordinateSchedule:
    """Rule k -> scalar law defining a product measure on sequences.

    Presets: ``exp-k`` (coordinate k is Exp(k)) and ``gauss-cond``
    (coordinate k is N(0, 1/k^2) conditioned on  x_k >= -1/sqrt(k)).
    Custom rules get conservative two-horizon tail bounds instead of the
    presets' analytic ones.
    """

    preset: str
    rule: Callable[[int], ScalarLaw]

    @classmethod
    def exp_k(cls) -> "CoordinateSchedule":
        return cls(EXP_K, _exp_k_rule)

    @classmethod
    def gauss_cond(cls) -> "CoordinateSchedule":
        return cls(GAUSS_COND, _gauss_cond_rule)

    @classmethod
    def custom(cls, rule: Callable[[int], ScalarLaw]) -> "CoordinateSchedule":
        return cls(CUSTOM, rule)

    def law(self, k: int) -> ScalarLaw:
        if not (isinstance(k, (int, np.integer)) and k >= 1):
            raise ValueError(f"coordinate index must be a positive integer, got {k}")
        return self.rule(int(k))

    def conditioning_mass(self, k: int) -> float:
        """Mass the unconditioned base law puts on the conditioning event
        (Phi(sqrt k) for the gauss-cond preset); 1 for unconditioned laws."""
        law = self.law(k)
        if isinstance(law, LowerTruncated):
            return law.normalizer
        return 1.0


@dataclass(frozen=True)
class FiniteCenter:
    """Finitely supported sequence: coordinate k holds entries[k], 0 elsewhere.

    Canonical form stores no explicit zeros, so equal sequences compare equal.
    """

    entries: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        seen = set()
        for k, x in self.entries:
            if not (isinstance(k, int) and k >= 1):
                raise ValueError(f"support index must be a positive integer, got {k}")
            if k in seen:
                raise ValueError(f"duplicate support index {k}")
            if x == 0.0 or not math.isfinite(x):
                raise ValueError(f"support values must be nonzero and finite, got {k}: {x}")
            seen.add(k)
        if tuple(sorted(k for k, _ in self.entries)) != tuple(k for k, _ in self.entries):
            raise ValueError("support must be sorted by index")

    @classmethod
    def of(cls, values: Mapping[int, float]) -> "FiniteCenter":
        """Canonicalize a mapping: drop zeros, sort by index."""
        ent = tuple(sorted((int(k), float(x)) for k, x in values.items() if float(x) != 0.0))
        return cls(ent)

    def value(self, k: int) -> float:
        for kk, x in self.entries:
            if kk == k:
                return x
        return 0.0

    @property
    def max_index(self) -> int:
        return self.entries[-1][0] if self.entries else 0

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries)

    def with_value(self, k: int, x: float) -> "FiniteCenter":
        d = self.as_dict()
        d[k] = x
        return FiniteCenter.of(d)

    def __str__(self) -> str:
        inner = ", ".join(f"{k}: {x:.17g}" for k, x in self.entries)
        return "{" + inner + "}"


ZERO_CENTER = FiniteCenter()


@dataclass(frozen=True)
class BoxShape:
    """Product-of-intervals box: coordinate k gets halfwidth overrides[k] if
    present, else default_radius.  With no overrides this is the sup-norm
    ball of radius default_radius."""

    default_radius: float
    overrides: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if not (self.default_radius > 0.0 and math.isfinite(self.default_radius)):
            raise ValueError(f"radius must be positive, got {self.default_radius}")
        for k, r in self.overrides:
            if not (isinstance(k, int) and k >= 1):
                raise ValueError(f"override index must be a positive integer, got {k}")
            if not (r > 0.0 and math.isfinite(r)):
                raise ValueError(f"override radius must be positive, got {k}: {r}")

    @classmethod
    def ball(cls, r: float) -> "BoxShape":
        return cls(float(r))

    @classmethod
    def of(cls, r: float, overrides: Mapping[int, float]) -> "BoxShape":
        return cls(float(r), tuple(sorted((int(k), float(v)) for k, v in overrides.items())))

    def radius(self, k: int) -> float:
        for kk, r in self.overrides:
            if kk == k:
                return r
        return self.default_radius

    @property
    def max_override_index(self) -> int:
        return max((k for k, _ in self.overrides), default=0)


@dataclass(frozen=True)
class ProbBracket:
    """Rigorous probability enclosure: lower <= value <= upper."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"invalid bracket [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, p: float) -> bool:
        return self.lower <= p <= self.upper


def _bracket(lower: float, upper: float) -> ProbBracket:
    lo = min(max(lower, 0.0), 1.0)
    up = min(max(upper, 0.0), 1.0)
    return ProbBracket(min(lo, up), up)


def _rounding_guard(K: int) -> float:
    """Relative allowance dominating accumulated rounding of a K-factor
    product (few-ulp factors, fsum of logs, one exp)."""
    return (16.0 * K + 128.0) * _EPS


def _check_truncation(center: FiniteCenter, shape: BoxShape, K: int) -> None:
    if not (isinstance(K, (int, np.integer)) and K >= 1):
        raise ValueError(f"truncation K must be a positive integer, got {K}")
    if K < center.max_index:
        raise ValueError(f"K={K} is below the center support (max index {center.max_index})")
    if K < shape.max_override_index:
        raise ValueError(f"K={K} is below the shape overrides (max index {shape.max_override_index})")


def _factor(schedule: CoordinateSchedule, k: int, center_value: float, radius: float,
            normalized: bool) -> float:
    f = laws.ball_factor(schedule.law(k), center_value, radius)
    if not normalized:
        f *= schedule.conditioning_mass(k)
    return f


def _max_factor(schedule: CoordinateSchedule, k: int, radius: float,
                normalized: bool) -> tuple[float, float]:
    c, f = laws.argmax_center(schedule.law(k), radius)
    if not normalized:
        f *= schedule.conditioning_mass(k)
    return c, f


def _log_product(factors) -> tuple[float, bool]:
    """(log of product, hit_zero).  Factors must be probabilities."""
    logs = []
    for f in factors:
        if f <= 0.0:
            return -math.inf, True
        logs.append(math.log(f))
    return math.fsum(logs), False


def truncated_ball_product(schedule: CoordinateSchedule, center: FiniteCenter,
                           shape: BoxShape, K: int, normalized: bool = True) -> float:
    """Plain product of the first K interval factors (no tail, no guard);
    the exact ball probability of the K-dimensional truncated measure."""
    _check_truncation(center, shape, K)
    ls, zero = _log_product(
        _factor(schedule, k, center.value(k), shape.radius(k), normalized)
        for k in range(1, K + 1)
    )
    return 0.0 if zero else math.exp(ls)


def _tail_deficit(schedule: CoordinateSchedule, shape: BoxShape, K: int,
                  normalized: bool) -> tuple[float, float]:
    """(sum bounding the tail deficits, log of explicitly extended factors).

    Returns an upper bound S on sum_{k > K'} (1 - f_k) together with the
    log-product of center-0 factors on the internal extension (K, K'];
    the tail of the infinite product is then >= exp(logext) * (1 - S).
    The same S is valid when the tail factors sit at the per-coordinate
    argmax, since those dominate the center-0 factors for the presets and
    the floor is only ever used as a lower bound.
    """
    r = shape.default_radius
    if schedule.preset == EXP_K:
        # deficit at center 0 is exactly exp(-k r): geometric sum
        s = math.exp(-(K + 1) * r) / -math.expm1(-r)
        return s, 0.0
    if schedule.preset == GAUSS_COND:
        # Phi(-x) <= exp(-x^2/2)/2 bounds both tail misses; valid once
        # k r >= sqrt(k), so extend explicitly up to K* = max(K, ceil(1/r^2)).
        k_star = max(K, math.ceil(1.0 / (r * r)))
        logext, _ = _log_product(
            _factor(schedule, k, 0.0, r, normalized) for k in range(K + 1, k_star + 1)
        )
        a = 0.5 * r * r
        s1 = 0.5 * math.exp(-((k_star + 1) ** 2) * a) / -math.expm1(-2.0 * (k_star + 1) * a)
        if normalized:
            s = s1 / std_normal_cdf(math.sqrt(k_star + 1))
        else:
            s2 = 0.5 * math.exp(-0.5 * (k_star + 1)) / -math.expm1(-0.5)
            s = s1 + s2
        return s, logext
    # custom: conservative Weierstrass floor over a finite extra horizon;
    # nothing is claimed beyond it.
    horizon = 2 * K + 16
    deficit = 0.0
    for k in range(K + 1, horizon + 1):
        deficit += 1.0 - _factor(schedule, k, 0.0, r, normalized)
    return deficit, 0.0


def _tail_lower(schedule: CoordinateSchedule, shape: BoxShape, K: int,
                normalized: bool) -> float:
    s, logext = _tail_deficit(schedule, shape, K, normalized)
    if s >= 1.0 or logext == -math.inf:
        return 0.0
    return math.exp(logext) * (1.0 - s)


def _exp_k_sup_tail_lower(shape: BoxShape, K: int) -> float:
    r = shape.default_radius
    s = math.exp(-2.0 * (K + 1) * r) / -math.expm1(-2.0 * r)
    return max(0.0, 1.0 - s)


def _sup_tail_lower(schedule: CoordinateSchedule, shape: BoxShape, K: int,
                    normalized: bool) -> float:
    if schedule.preset == EXP_K:
        # max factors are 1 - exp(-2kr): the center-0 bound with doubled rate
        return _exp_k_sup_tail_lower(shape, K)
    # gauss-cond and custom: the center-0 floor also under-estimates the
    # argmax tail (argmax factors dominate the center-0 factors).
    return _tail_lower(schedule, shape, K, normalized)


def ball_prob(schedule: CoordinateSchedule, center: FiniteCenter, shape: BoxShape,
              K: int, normalized: bool = True) -> ProbBracket:
    """Bracket the ball probability mu(box around center).

    lower = (product of the first K factors) * analytic tail lower bound,
    upper = product of the first K factors; both inflated by the rounding
    guard.  A vanishing factor short-circuits to the exact {0, 0}.
    """
    _check_truncation(center, shape, K)
    ls, zero = _log_product(
        _factor(schedule, k, center.value(k), shape.radius(k), normalized)
        for k in range(1, K + 1)
    )
    if zero:
        return ProbBracket(0.0, 0.0)
    p = math.exp(ls)
    g = _rounding_guard(K)
    tail = _tail_lower(schedule, shape, K, normalized)
    upper = p * (1.0 + g)
    if upper == 0.0:  # product underflowed but is genuinely positive
        upper = 1e-300
    return _bracket(p * tail * (1.0 - g), upper)


def sup_ball_prob(schedule: CoordinateSchedule, shape: BoxShape, K: int,
                  normalized: bool = True) -> ProbBracket:
    """Bracket the supremum of ball probabilities over all centers: the
    product of per-coordinate maximal factors, with the same tail scheme."""
    _check_truncation(ZERO_CENTER, shape, K)
    ls, zero = _log_product(
        _max_factor(schedule, k, shape.radius(k), normalized)[1] for k in range(1, K + 1)
    )
    if zero:
        return ProbBracket(0.0, 0.0)
    p = math.exp(ls)
    g = _rounding_guard(K)
    tail = _sup_tail_lower(schedule, shape, K, normalized)
    upper = p * (1.0 + g)
    if upper == 0.0:
        upper = 1e-300
    return _bracket(p * tail * (1.0 - g), upper)


def maximizing_sequence_element(schedule: CoordinateSchedule, shape: BoxShape,
                                n: int) -> FiniteCenter:
    """n-th element of the maximizing sequence: per-coordinate optimal
    centers up to n, zero beyond (canonical form drops zero entries)."""
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"n must be a positive integer, got {n}")
    vals = {}
    for k in range(1, int(n) + 1):
        c, _ = laws.argmax_center(schedule.law(k), shape.radius(k))
        vals[k] = c
    return FiniteCenter.of(vals)


IMPROVE_SLACK = 1e-12


def improve_center(schedule: CoordinateSchedule, center: FiniteCenter, shape: BoxShape,
                   K: int) -> Optional[FiniteCenter]:
    """Strictly improve the center at the smallest coordinate whose factor
    sits below the coordinate maximum (by more than relative slack 1e-12);
    returns None when every coordinate up to K is already optimal.

    Strictness is certified by the exact per-coordinate factor ratio, so
    the truncated product of the result exceeds the old one by that ratio.
    """
    bracket = ball_prob(schedule, center, shape, K)
    if not bracket.lower > 0.0:
        raise ValueError("center has zero bracket lower bound; nothing to improve from")
    for k in range(1, K + 1):
        r_k = shape.radius(k)
        f = laws.ball_factor(schedule.law(k), center.value(k), r_k)
        best_c, best_f = laws.argmax_center(schedule.law(k), r_k)
        if f < best_f * (1.0 - IMPROVE_SLACK):
            return center.with_value(k, best_c)
    return None


_MC_CHUNK = 8192


def mc_ball_prob(schedule: CoordinateSchedule, center: FiniteCenter, shape: BoxShape,
                 K: int, n: int, seed: int, workers: int = 1) -> MCEstimate:
    """Monte Carlo hit fraction for the K-dimensional truncation.

    Coordinates are drawn by inverse CDF from the per-sample substream
    (draw index = coordinate index - 1), so the estimate is bit-identical
    for any chunking or worker count.
    """
    _check_truncation(center, shape, K)
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"sample count must be a positive integer, got {n}")
    centers = np.array([center.value(k) for k in range(1, K + 1)])
    radii = np.array([shape.radius(k) for k in range(1, K + 1)])
    law_list = [schedule.law(k) for k in range(1, K + 1)]

    def run(lo: int, hi: int) -> int:
        keys = sample_keys(seed, lo, hi)
        u = uniform_block(keys, 0, K)
        hit = np.ones(hi - lo, dtype=bool)
        for j, law in enumerate(law_list):
            x = laws.quantile_array(law, u[:, j])
            np.logical_and(hit, np.abs(x - centers[j]) <= radii[j], out=hit)
        return int(hit.sum())

    hits = sum(map_chunks(run, chunk_ranges(int(n), _MC_CHUNK), workers))
    return MCEstimate.from_hits(hits, int(n), int(seed))


@dataclass(frozen=True)
class NullSequenceReport:
    """Desk-scale decay check of one sampled coordinate sequence."""

    K: int
    seed: int
    threshold: float
    tail_start: int
    tail_max: float
    passed: bool


def null_sequence_check(schedule: CoordinateSchedule, K: int, seed: int,
                        threshold: float = 0.1) -> NullSequenceReport:
    """Sample one truncated realization and flag whether the late
    coordinates (K/2 < k <= K) have sup below the threshold."""
    if not (isinstance(K, (int, np.integer)) and K >= 10):
        raise ValueError(f"K must be an integer >= 10, got {K}")
    u = uniform_stream(seed, 0, 0, int(K))
    xs = np.array([laws.quantile(schedule.law(k), float(u[k - 1])) for k in range(1, K + 1)])
    tail_start = int(K) // 2 + 1
    tail_max = float(np.max(np.abs(xs[tail_start - 1:])))
    return NullSequenceReport(int(K), int(seed), float(threshold), tail_start,
                              tail_max, tail_max <= threshold)
