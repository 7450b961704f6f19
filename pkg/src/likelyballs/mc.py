"""Monte Carlo bookkeeping shared by the product- and path-measure samplers."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")


@dataclass(frozen=True)
class MCEstimate:
    """Hit-fraction estimate with binomial standard error.

    Degenerate estimates (all hits or all misses, stderr 0) are flagged so
    callers do not mistake them for infinitely precise values.
    """

    p_hat: float
    stderr: float
    samples: int
    seed: int
    hits: int

    @classmethod
    def from_hits(cls, hits: int, samples: int, seed: int) -> "MCEstimate":
        p = hits / samples
        se = math.sqrt(p * (1.0 - p) / samples)
        return cls(p_hat=p, stderr=se, samples=samples, seed=seed, hits=hits)

    @property
    def degenerate(self) -> bool:
        return self.stderr == 0.0


def chunk_ranges(n: int, size: int) -> list[tuple[int, int]]:
    """Fixed chunk grid over [0, n); independent of worker count so results
    never depend on parallelism."""
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def map_chunks(fn: Callable[[int, int], T], chunks: Sequence[tuple[int, int]],
               workers: int = 1) -> list[T]:
    """Apply fn to each (lo, hi) chunk, optionally on a thread pool.

    Results come back in chunk order; combining them with order-independent
    reductions (integer sums) keeps outputs bit-identical for any workers.
    """
    if workers <= 1 or len(chunks) <= 1:
        return [fn(lo, hi) for lo, hi in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: fn(c[0], c[1]), chunks))
