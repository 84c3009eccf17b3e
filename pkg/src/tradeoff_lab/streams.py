"""Counter-based random streams and order-stable Monte Carlo reductions.

Every random number used by an estimator is a pure function of
``(seed, purpose, sample index, draw index)``: a SplitMix64-style hash of the
counter, keyed by the seed. Sample ``i`` therefore sees the same values
whether it is drawn alone, inside a chunk, or on another worker, and a
reduction over ``n`` samples is bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable

import numpy as np
from scipy.special import ndtri

__all__ = [
    "Purpose",
    "SampleStream",
    "uniforms",
    "normals",
    "CHUNK",
    "default_threads",
    "map_chunks",
    "stable_mean",
    "Estimate",
]

CHUNK = 8192
_MAX_DRAWS = 1 << 20

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


class Purpose(IntEnum):
    """Disjoint sub-streams; the label streams realise Y and its copy Y'."""

    X = 1
    LABEL = 2
    LABEL_PRIME = 3
    PERTURB = 4
    AUX = 5
    INIT = 6


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _keys(seed: int, purpose: int) -> tuple[np.uint64, np.uint64]:
    state = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(purpose)]).generate_state(
        2, dtype=np.uint64
    )
    return np.uint64(state[0]), np.uint64(state[1])


def _raw(seed: int, purpose: int, index: np.ndarray, m: int) -> np.ndarray:
    if m > _MAX_DRAWS:
        raise ValueError(f"at most {_MAX_DRAWS} draws per sample, got {m}")
    k1, k2 = _keys(seed, purpose)
    idx = np.asarray(index, dtype=np.uint64).reshape(-1, 1)
    ctr = idx * np.uint64(_MAX_DRAWS) + np.arange(m, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(_mix(ctr * _GOLDEN + k1) ^ k2)


def uniforms(seed: int, purpose: int, index, m: int) -> np.ndarray:
    """Open-interval uniforms, shape ``(len(index), m)``."""
    bits = _raw(seed, purpose, index, m) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def normals(seed: int, purpose: int, index, m: int) -> np.ndarray:
    """Standard normals by exact inverse CDF, shape ``(len(index), m)``."""
    return ndtri(uniforms(seed, purpose, index, m))


@dataclass(frozen=True)
class SampleStream:
    """Random values owned by one Monte Carlo sample index.

    ``SampleStream(seed, i).normal(purpose, m)`` equals row ``i`` of
    ``normals(seed, purpose, range(n), m)`` bit for bit.
    """

    seed: int
    stream_id: int

    def uniform(self, purpose: int, m: int) -> np.ndarray:
        return uniforms(self.seed, purpose, [self.stream_id], m)[0]

    def normal(self, purpose: int, m: int) -> np.ndarray:
        return normals(self.seed, purpose, [self.stream_id], m)[0]


def default_threads() -> int:
    env = os.environ.get("TRADEOFF_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"TRADEOFF_LAB_THREADS must be an integer, got {env!r}") from None
    return 1


def map_chunks(
    fn: Callable[[np.ndarray], np.ndarray],
    n: int,
    threads: int | None = None,
    chunk: int = CHUNK,
) -> np.ndarray:
    """Evaluate ``fn`` on fixed index chunks and concatenate in index order.

    ``fn`` receives an index array and returns per-sample values (leading
    axis = samples). Chunk boundaries do not depend on ``threads``.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    threads = default_threads() if threads is None else max(1, int(threads))

    def run(b):
        return np.asarray(fn(np.arange(b[0], b[1], dtype=np.int64)))

    if threads == 1 or len(bounds) == 1:
        parts = [run(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, bounds))
    return np.concatenate(parts, axis=0)


def stable_mean(values: np.ndarray) -> float:
    """Correctly rounded mean, independent of summation order."""
    values = np.asarray(values, dtype=np.float64).ravel()
    return math.fsum(values.tolist()) / values.size


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error.

    ``exact`` is False when the per-sample values are certified lower bounds
    of the target quantity rather than the quantity itself.
    """

    value: float
    std_error: float
    n: int
    seed: int
    exact: bool = True

    @classmethod
    def from_samples(cls, values, seed: int, exact: bool = True) -> "Estimate":
        values = np.asarray(values, dtype=np.float64).ravel()
        n = values.size
        mean = stable_mean(values)
        if n > 1:
            dev = values - mean
            var = math.fsum((dev * dev).tolist()) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        return cls(mean, se, n, seed, exact)

    def __format__(self, spec):
        return f"{format(self.value, spec)} ± {format(self.std_error, spec)}"
