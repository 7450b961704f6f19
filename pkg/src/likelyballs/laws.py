"""One-dimensional laws: CDFs, interval masses, ball factors, optimal centers.

The three variants are the coordinate distributions used by the product
measures in this package: exponentials with growing rate, centered
Gaussians, and Gaussians conditioned to stay above a lower bound.
All operations are pure; instances are immutable and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import erfc as _erfc

from ._rng import normal_quantile, std_normal_cdf, std_normal_sf


@dataclass(frozen=True)
class Exponential:
    """Exp(rate): cdf x -> 1 - exp(-rate * max(x, 0))."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")


@dataclass(frozen=True)
class Gaussian:
    """N(mean, std^2): cdf x -> Phi((x - mean)/std)."""

    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0.0 and math.isfinite(self.std)):
            raise ValueError(f"std must be positive and finite, got {self.std}")
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")


@dataclass(frozen=True)
class LowerTruncated:
    """A Gaussian conditioned on the event {X >= lower}."""

    base: Gaussian
    lower: float

    def __post_init__(self):
        if not math.isfinite(self.lower):
            raise ValueError("lower bound must be finite")
        if self.normalizer <= 0.0:
            raise ValueError("base law carries no mass above the truncation point")

    @property
    def normalizer(self) -> float:
        """P(base >= lower), the conditioning mass."""
        return std_normal_sf((self.lower - self.base.mean) / self.base.std)


ScalarLaw = Union[Exponential, Gaussian, LowerTruncated]


def cdf(law: ScalarLaw, x: float) -> float:
    """P(X <= x); total function, monotone, limits 0 and 1."""
    if isinstance(law, Exponential):
        if x <= 0.0:
            return 0.0
        return -math.expm1(-law.rate * x)
    if isinstance(law, Gaussian):
        return std_normal_cdf((x - law.mean) / law.std)
    if isinstance(law, LowerTruncated):
        b = law.base
        num = cdf(b, x) - cdf(b, law.lower)
        return min(1.0, max(0.0, num) / law.normalizer)
    raise TypeError(f"not a scalar law: {law!r}")


def survival(law: ScalarLaw, x: float) -> float:
    """P(X > x), computed directly so tiny tails keep relative accuracy."""
    if isinstance(law, Exponential):
        if x <= 0.0:
            return 1.0
        return math.exp(-law.rate * x)
    if isinstance(law, Gaussian):
        return std_normal_sf((x - law.mean) / law.std)
    if isinstance(law, LowerTruncated):
        lo = max(x, law.lower)
        return min(1.0, survival(law.base, lo) / law.normalizer)
    raise TypeError(f"not a scalar law: {law!r}")


def interval_prob(law: ScalarLaw, a: float, b: float) -> float:
    """P(a <= X <= b), clamped to [0, 1].

    The difference is taken in whichever of the two equivalent forms
    cdf(b) - cdf(a) or survival(a) - survival(b) keeps the operands away
    from 1, so factors of balls far in a tail do not cancel.
    """
    if a > b:
        raise ValueError(f"interval endpoints out of order: a={a} > b={b}")
    if a == b:
        return 0.0
    if isinstance(law, Exponential):
        if b <= 0.0:
            return 0.0
        lo = max(a, 0.0)
        # exp(-r*lo) - exp(-r*b) without cancellation
        return min(1.0, -math.exp(-law.rate * lo) * math.expm1(-law.rate * (b - lo)))
    ca, cb = cdf(law, a), cdf(law, b)
    if ca + cb > 1.0:
        p = survival(law, a) - survival(law, b)
    else:
        p = cb - ca
    return min(1.0, max(0.0, p))


def ball_factor(law: ScalarLaw, center: float, r: float) -> float:
    """Mass of the interval [center - r, center + r]; one factor of a
    product-measure ball probability."""
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    return interval_prob(law, center - r, center + r)


def argmax_center(law: ScalarLaw, r: float) -> tuple[float, float]:
    """Center maximizing ball_factor(law, ., r) and the maximal factor.

    Closed forms: the exponential pins the interval's left edge to 0
    (center r), a Gaussian centers on its mean, and a lower-truncated
    Gaussian pins the interval to the truncation point unless the mean
    already fits inside (center max(mean, lower + r)).
    """
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    if isinstance(law, Exponential):
        return r, -math.expm1(-2.0 * law.rate * r)
    if isinstance(law, Gaussian):
        return law.mean, ball_factor(law, law.mean, r)
    if isinstance(law, LowerTruncated):
        c = max(law.base.mean, law.lower + r)
        return c, ball_factor(law, c, r)
    raise TypeError(f"not a scalar law: {law!r}")


def quantile(law: ScalarLaw, u: float) -> float:
    """The u-quantile for u in (0, 1); inverse of cdf on the support."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1), got {u}")
    if isinstance(law, Exponential):
        return -math.log1p(-u) / law.rate
    if isinstance(law, Gaussian):
        return law.mean + law.std * normal_quantile(u)
    if isinstance(law, LowerTruncated):
        b = law.base
        v = cdf(b, law.lower) + u * law.normalizer
        if v >= 1.0:
            v = math.nextafter(1.0, 0.0)
        return b.mean + b.std * normal_quantile(v)
    raise TypeError(f"not a scalar law: {law!r}")


def quantile_array(law: ScalarLaw, u: np.ndarray) -> np.ndarray:
    """Vectorized quantile, same map as quantile(); u strictly inside (0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    if isinstance(law, Exponential):
        return -np.log1p(-u) / law.rate
    if isinstance(law, Gaussian):
        return law.mean + law.std * normal_quantile(u)
    if isinstance(law, LowerTruncated):
        b = law.base
        v = cdf(b, law.lower) + u * law.normalizer
        v = np.minimum(v, np.nextafter(1.0, 0.0))
        return b.mean + b.std * normal_quantile(v)
    raise TypeError(f"not a scalar law: {law!r}")


def cdf_array(law: ScalarLaw, x: np.ndarray) -> np.ndarray:
    """Vectorized cdf (used by samplers and tests)."""
    x = np.asarray(x, dtype=np.float64)
    if isinstance(law, Exponential):
        return np.where(x <= 0.0, 0.0, -np.expm1(-law.rate * np.maximum(x, 0.0)))
    if isinstance(law, Gaussian):
        z = (x - law.mean) / law.std
        return 0.5 * _erfc(-z / math.sqrt(2.0))
    if isinstance(law, LowerTruncated):
        num = cdf_array(law.base, x) - cdf(law.base, law.lower)
        return np.clip(num / law.normalizer, 0.0, 1.0)
    raise TypeError(f"not a scalar law: {law!r}")
