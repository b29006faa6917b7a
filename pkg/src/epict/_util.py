"""Shared plumbing: deterministic seed derivation, small statistics helpers,
and an order-preserving process pool wrapper.

All Monte Carlo code in this package derives its randomness from a single
64-bit master seed through :func:`mix64`, so results are reproducible and
independent of how work is split across worker processes.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ProcessPoolExecutor

_MASK64 = (1 << 64) - 1


def mix64(*parts: int) -> int:
    """Fold integer parts into one well-mixed 64-bit value (splitmix64 core)."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h + (p & _MASK64)) & _MASK64
        h ^= h >> 30
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 27
        h = (h * 0x94D049BB133111EB) & _MASK64
        h ^= h >> 31
    return h


def float_key(x: float) -> int:
    """Bit pattern of a float, for seeding keyed on exact coordinates."""
    return struct.unpack(">Q", struct.pack(">d", float(x)))[0]


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def chunk_ranges(total: int, size: int) -> list[tuple[int, int]]:
    """Split ``range(total)`` into (start, count) chunks of at most ``size``.

    Chunk boundaries depend only on ``total`` and ``size``, never on the
    worker count, so parallel reductions stay bit-identical.
    """
    return [(start, min(size, total - start)) for start in range(0, total, size)]


def map_ordered(fn, arg_list, workers: int):
    """Map ``fn`` over ``arg_list`` preserving order, optionally in processes."""
    if workers <= 1 or len(arg_list) <= 1:
        return [fn(a) for a in arg_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, arg_list))
