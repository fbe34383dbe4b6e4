"""Cost model: expected and empirical per-node costs, traversal cost,
deviation detection, and sampled cost estimation (ACC).

Costs are in nanoseconds per operation. Expected statistics are computed
by simulating model-based placement, not by building a node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gapped_array import model_based_positions
from .linear_model import LinearModel, predict_many

INITIAL_SAMPLE = 64
EXTRAPOLATION_TOL = 0.2


@dataclass(frozen=True)
class CostWeights:
    w_s: float = 10.0    # per exponential search iteration
    w_i: float = 1.0     # per shifted element
    w_d: float = 10.0    # per tree level traversed
    w_b: float = 1e-6    # per byte of index structure

    def __post_init__(self):
        for name in ("w_s", "w_i", "w_d", "w_b"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")

    def scaled(self, factor: float) -> "CostWeights":
        return CostWeights(self.w_s * factor, self.w_i * factor, self.w_d * factor, self.w_b * factor)


DEFAULT_WEIGHTS = CostWeights()


@dataclass(frozen=True)
class ExpectedStats:
    expected_search_iters: float = 0.0
    expected_shifts: float = 0.0
    insert_fraction: float = 0.5

    def __post_init__(self):
        if self.expected_search_iters < 0 or self.expected_shifts < 0:
            raise ValueError("expected statistics must be non-negative")
        if not 0.0 <= self.insert_fraction <= 1.0:
            raise ValueError("insert_fraction must lie in [0, 1]")

    @property
    def search_iters(self) -> float:
        return self.expected_search_iters

    @property
    def shifts(self) -> float:
        return self.expected_shifts


@dataclass
class NodeStats:
    cum_search_iterations: int = 0
    num_lookups: int = 0
    cum_shifts: int = 0
    num_inserts: int = 0

    @property
    def search_iters(self) -> float:
        ops = self.num_lookups + self.num_inserts
        return self.cum_search_iterations / ops if ops else 0.0

    @property
    def shifts(self) -> float:
        return self.cum_shifts / self.num_inserts if self.num_inserts else 0.0

    @property
    def insert_fraction(self) -> float:
        ops = self.num_lookups + self.num_inserts
        return self.num_inserts / ops if ops else 0.0


# ----------------------------------------------------------------------
# simulated placement statistics

def search_iterations_for_error(err) -> np.ndarray:
    """Exponential-search iterations for a target ``err`` slots away,
    ceil(log2(err + 1))."""
    return np.ceil(np.log2(np.asarray(err, dtype=np.float64) + 1.0))


def gap_distances(positions: np.ndarray, capacity: int) -> np.ndarray:
    """Distance from each occupied slot to the closest gap. Positions past
    either end of the array count as gaps."""
    n = len(positions)
    if n == 0:
        return np.zeros(0)
    breaks = np.flatnonzero(np.diff(positions) != 1) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [n])) - 1
    run_len = ends - starts + 1
    run_id = np.repeat(np.arange(len(starts)), run_len)
    left_gap = positions[starts][run_id] - 1
    right_gap = positions[ends][run_id] + 1
    return np.minimum(positions - left_gap, right_gap - positions).astype(np.float64)


def placement_stats(keys: np.ndarray, model: LinearModel, capacity: int) -> tuple[float, float]:
    keys = np.asarray(keys, dtype=np.float64)
    if keys.size == 0:
        return 0.0, 0.0
    pos = model_based_positions(keys, model, capacity)
    pred = predict_many(model, keys, capacity)
    s = float(search_iterations_for_error(np.abs(pred - pos)).mean())
    i = float(gap_distances(pos, capacity).mean())
    return s, i


def expected_stats(keys, model: LinearModel, capacity: int,
                   insert_fraction: float = 0.5) -> ExpectedStats:
    s, i = placement_stats(keys, model, capacity)
    return ExpectedStats(s, i, insert_fraction)


def sampled_stats_with_work(keys, model: LinearModel, capacity: int,
                            insert_fraction: float = 0.5,
                            initial_sample: int = INITIAL_SAMPLE,
                            tol: float = EXTRAPOLATION_TOL) -> tuple[ExpectedStats, int]:
    """ACC. Returns the estimate and the number of keys simulated.

    Systematic samples of size s1, 2*s1, 4*s1, ... are placed into arrays of
    proportional capacity with the model scaled to match. Once the line
    through (s1, s2) predicts s3 within ``tol`` for both statistics, the line
    through (s2, s3) is extended to the full key count: search iterations
    against log2(size), shifts against size.
    """
    keys = np.asarray(keys, dtype=np.float64)
    n = keys.size
    s1 = min(initial_sample, n)
    if n <= 4 * s1:
        return expected_stats(keys, model, capacity, insert_fraction), n

    work = 0
    cache = {}

    def measure(s):
        nonlocal work
        if s not in cache:
            idx = (np.arange(s, dtype=np.int64) * n) // s
            cap = max(s, int(round(capacity * s / n)))
            cache[s] = placement_stats(keys[idx], model.scale(cap / capacity), cap)
            work += s
        return cache[s]

    while 4 * s1 < n:
        s2, s3 = 2 * s1, 4 * s1
        (a1, b1), (a2, b2), (a3, b3) = measure(s1), measure(s2), measure(s3)
        # iterations: alpha + beta*log2(s); doubling adds beta
        a_pred = a2 + (a2 - a1)
        b_pred = b2 + (b2 - b1) / (s2 - s1) * (s3 - s2)
        if _within(a_pred, a3, tol) and _within(b_pred, b3, tol):
            a_full = a3 + (a3 - a2) * math.log2(n / s3)
            b_full = b3 + (b3 - b2) / (s3 - s2) * (n - s3)
            return ExpectedStats(max(a_full, 0.0), max(b_full, 0.0), insert_fraction), work
        s1 = s2
    return expected_stats(keys, model, capacity, insert_fraction), work + n


def _within(pred: float, actual: float, tol: float) -> bool:
    return abs(pred - actual) <= tol * abs(actual)


def expected_stats_sampled(keys, model: LinearModel, capacity: int,
                           insert_fraction: float = 0.5) -> ExpectedStats:
    return sampled_stats_with_work(keys, model, capacity, insert_fraction)[0]


# ----------------------------------------------------------------------
# costs

def intra_cost(search_iters: float, shifts: float, insert_fraction: float,
               weights: CostWeights = DEFAULT_WEIGHTS) -> float:
    return weights.w_s * search_iters + weights.w_i * shifts * insert_fraction


def intra_node_cost(stats, weights: CostWeights = DEFAULT_WEIGHTS) -> float:
    """``w_s*S + w_i*I*F`` for ExpectedStats or NodeStats."""
    return intra_cost(stats.search_iters, stats.shifts, stats.insert_fraction, weights)


def traverse_cost(depth: int, structure_bytes: float, weights: CostWeights = DEFAULT_WEIGHTS) -> float:
    return weights.w_d * depth + weights.w_b * structure_bytes


def deviation_detected(expected: float, empirical: float,
                       weights: CostWeights = DEFAULT_WEIGHTS) -> bool:
    """Empirical cost more than 50% above expected. With a zero expectation,
    anything above one search iteration's cost counts."""
    if expected <= 0.0:
        return empirical > weights.w_s
    return empirical > 1.5 * expected


def composite_index_cost(node_costs, key_counts) -> float:
    """Key-weighted mean of per-data-node (intra + traverse) costs."""
    costs = np.asarray(node_costs, dtype=np.float64)
    counts = np.asarray(key_counts, dtype=np.float64)
    total = counts.sum()
    if costs.size == 0 or total == 0:
        return 0.0
    return float((costs * counts).sum() / total)
