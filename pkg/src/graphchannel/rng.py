"""Seeded random streams and an order-preserving parallel map.

Every Monte Carlo loop in the package draws sample ``i`` from a stream keyed
by ``(seed, label, i)``.  Results therefore do not depend on how the indices
are scheduled over workers.
"""
from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

MAX_SEED = 2**64 - 1


def _label_key(label: str | int) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    return zlib.crc32(label.encode("utf-8"))


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, *key: str | int) -> np.random.Generator:
    """Counter-based (Philox) generator for ``seed`` and a spawn key path."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(_label_key(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return stream(int(rng))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` and return results in input order."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no samples")
    if np.all(arr == arr[0]):
        return float(arr[0]), 0.0
    mean = float(arr.mean())
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))
