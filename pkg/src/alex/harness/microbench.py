"""Exponential search vs. bounded binary search over a sorted array.

Both searches are written in plain Python so each probe costs the same and
latency follows the probe count. A query starts from a position that is off
by exactly ``d`` slots from the target, as a model prediction would be.
"""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass

import numpy as np


def exponential_search(keys: list, start: int, key: float) -> tuple[int, int]:
    """Lower bound of ``key`` from ``start``; (slot, doubling iterations)."""
    n = len(keys)
    if keys[start] < key:
        it = 1
        lo = start + 1
        while True:
            probe = start + (1 << it) - 1
            if probe >= n:
                hi = n
                break
            if keys[probe] < key:
                it += 1
                lo = probe + 1
            else:
                hi = probe
                break
    else:
        it = 0
        hi = start
        off = 1
        while True:
            probe = start - off
            if probe < 0:
                lo = 0
                break
            if keys[probe] >= key:
                it += 1
                hi = probe
                off <<= 1
            else:
                lo = probe + 1
                break
    return _binary(keys, key, lo, hi)[0], it


def bounded_binary_search(keys: list, start: int, key: float, bound: int) -> tuple[int, int]:
    """Lower bound of ``key`` searched in [start - bound, start + bound]; (slot, halvings)."""
    return _binary(keys, key, max(0, start - bound), min(len(keys), start + bound + 1))


def _binary(keys: list, key: float, lo: int, hi: int) -> tuple[int, int]:
    it = 0
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
        it += 1
    return lo, it


def error_magnitudes(max_error: int) -> list[int]:
    """0, 3, 15, 63, ...: d = 4**j - 1 up to ``max_error``."""
    out = []
    j = 0
    while 4 ** j - 1 <= max_error:
        out.append(4 ** j - 1)
        j += 1
    return out


@dataclass
class SearchTiming:
    method: str
    error: int
    mean_ns: float
    iterations: float


def search_microbenchmark(num_keys: int = 1_000_000, errors=None, bound: int = 1 << 16,
                          queries: int = 2000, repeats: int = 7, seed=0) -> list[SearchTiming]:
    """Mean latency and iteration count per (method, error).

    Latency is the best of ``repeats`` passes over the same queries, which
    strips most scheduler noise. Half the queries start left of the target
    and half right of it.
    """
    rng = np.random.default_rng(seed)
    keys = np.sort(rng.random(num_keys)).tolist()
    if errors is None:
        errors = error_magnitudes(bound - 1)
    margin = max(errors) + 1
    if 2 * margin >= num_keys:
        raise ValueError("array too small for the largest error")
    targets = rng.integers(margin, num_keys - margin, queries).tolist()
    signs = np.where(rng.random(queries) < 0.5, -1, 1).tolist()
    cells = []
    for d in errors:
        starts = [t + s * d for t, s in zip(targets, signs)]
        cells.append((d, "exponential", starts))
        cells.append((d, "binary", starts))
    probe_keys = [keys[t] for t in targets]
    best = [float("inf")] * len(cells)
    results = [None] * len(cells)
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        # round-robin over cells so slow drift in machine speed hits all alike
        for _ in range(repeats):
            for c, (d, method, starts) in enumerate(cells):
                t0 = time.perf_counter_ns()
                if method == "exponential":
                    res = [exponential_search(keys, s, k) for s, k in zip(starts, probe_keys)]
                else:
                    res = [bounded_binary_search(keys, s, k, bound) for s, k in zip(starts, probe_keys)]
                best[c] = min(best[c], time.perf_counter_ns() - t0)
                results[c] = res
    finally:
        if was_enabled:
            gc.enable()
    out = []
    for (d, method, _), res, ns in zip(cells, results, best):
        if any(pos != t for (pos, _), t in zip(res, targets)):
            raise AssertionError(f"{method} search missed a target at error {d}")
        out.append(SearchTiming(method, d, ns / queries, sum(it for _, it in res) / queries))
    return out
