"""Fanout tree: picks the fanout of one RMI node during bulk load.

Level L of the tree splits the node's key space into 2**L equal parts. Each
part is costed as if it became a data node. Whole levels are added while the
total cost falls, then adjacent parts are merged or split locally while that
lowers the total further.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sizing
from .cost_model import (CostWeights, expected_stats, expected_stats_sampled, gap_distances,
                         intra_node_cost, search_iterations_for_error)
from .frames import Frame, clamped_slots
from .linear_model import fit_progressive

EMPTY_CAPACITY = 64
SMALL_NODE = 64


@dataclass(frozen=True)
class FanoutParams:
    weights: CostWeights
    density: float = 0.7
    d_u: float = 0.8
    payload_bytes: int = 8
    max_data_bytes: int = 16 << 20
    max_levels: int = 20
    insert_fraction: float = 0.5
    global_keys: int = 0      # keys in the whole index; scales the size term
    sampled: bool = True


@dataclass
class FanoutTreeNode:
    level: int
    index_in_level: int
    key_range: tuple[float, float]
    cost: float
    key_count: int
    start: int = 0           # slice of the key array covered by this node
    stop: int = 0
    oversized: bool = False


def creation_capacity(n: int, density: float, d_u: float, empty_capacity: int = EMPTY_CAPACITY) -> int:
    if n == 0:
        return empty_capacity
    return max(math.ceil(n / density - 1e-9), math.ceil((n + 1) / d_u - 1e-9))


@dataclass
class _Level:
    bounds: np.ndarray
    cost: np.ndarray        # key-weighted intra cost (plus depth surrogate if oversized)
    nbytes: np.ndarray      # data node metadata + bitmap
    oversized: np.ndarray


@dataclass
class FanoutResult:
    nodes: list
    fanout_log2: int
    level_costs: dict = field(default_factory=dict)


class _FanoutTree:
    def __init__(self, keys: np.ndarray, u: np.ndarray, region: Frame, params: FanoutParams):
        self.keys = keys
        self.u = u
        self.region = region
        self.p = params
        self.n = len(keys)
        glob = max(params.global_keys, self.n, 1)
        self.wb = params.weights.w_b * glob / max(self.n, 1)
        self.levels: dict[int, _Level] = {}

    def level(self, L: int) -> _Level:
        if L in self.levels:
            return self.levels[L]
        m = 1 << L
        if L == 0:
            bounds = np.array([0, self.n], dtype=np.int64)
        else:
            slots = clamped_slots(self.region.refine(L), self.u, m)
            bounds = np.searchsorted(slots, np.arange(m + 1), side="left")
        cost = np.zeros(m)
        nbytes = np.full(m, sizing.DATA_NODE_META_BYTES + sizing.bitmap_bytes(EMPTY_CAPACITY), dtype=np.float64)
        oversized = np.zeros(m, dtype=bool)
        counts = np.diff(bounds)
        small = np.flatnonzero((counts > 0) & (counts <= SMALL_NODE))
        if small.size:
            c, b = self._small_costs(bounds[small], counts[small])
            cost[small], nbytes[small] = c, b
        for i in np.flatnonzero(counts > SMALL_NODE).tolist():
            c, b, o = self._node_cost(int(bounds[i]), int(bounds[i + 1]))
            cost[i], nbytes[i], oversized[i] = c, b, o
        lv = _Level(bounds, cost, nbytes, oversized)
        self.levels[L] = lv
        return lv

    def _node_cost(self, lo: int, hi: int):
        p = self.p
        k = hi - lo
        cap = creation_capacity(k, p.density, p.d_u)
        oversized = sizing.data_node_bytes(cap, p.payload_bytes) > p.max_data_bytes
        keys = self.keys[lo:hi]
        model = fit_progressive(keys).scale(cap / k)
        stats_fn = expected_stats_sampled if p.sampled else expected_stats
        st = stats_fn(keys, model, cap, p.insert_fraction)
        c = intra_node_cost(st, p.weights) * k / self.n
        if oversized:
            # will have to become an internal node: at least one more level
            c += p.weights.w_d * k / self.n
        return c, sizing.DATA_NODE_META_BYTES + sizing.bitmap_bytes(cap), oversized

    def _small_costs(self, starts: np.ndarray, counts: np.ndarray):
        """``_node_cost`` for many small nodes at once.

        Below SMALL_NODE keys the progressive fit is the full fit and the
        sampled statistics are exact, so one segmented computation covers
        them all.
        """
        p = self.p
        k = counts.astype(np.float64)
        cap = np.maximum(np.ceil(k / p.density - 1e-9), np.ceil((k + 1) / p.d_u - 1e-9)).astype(np.int64)
        seg = np.repeat(np.arange(counts.size), counts)
        first = np.repeat(starts, counts)
        idx = np.arange(seg.size) + first - np.repeat(np.cumsum(counts) - counts, counts)
        x = self.keys[idx]
        rank = (idx - first).astype(np.float64)
        mx = np.bincount(seg, x) / k
        my = (k - 1) / 2
        dx = x - mx[seg]
        sxx = np.bincount(seg, dx * dx)
        sxy = np.bincount(seg, dx * (rank - my[seg]))
        ok = (sxx > 0) & np.isfinite(sxx)
        slope = np.where(ok, sxy / np.where(ok, sxx, 1.0), 0.0)
        intercept = np.where(ok, my - slope * mx, 0.0)
        f = cap / k
        slope, intercept = slope * f, intercept * f
        capr = cap[seg]
        pred = np.floor(slope[seg] * x + intercept[seg])
        pred = np.clip(pred, 0, capr - 1).astype(np.int64)
        r = rank.astype(np.int64)
        # segmented running max: lift each segment above everything before it
        base = np.cumsum(cap + counts) - (cap + counts)
        pos = np.maximum.accumulate(pred - r + base[seg]) - base[seg] + r
        pos = np.minimum(pos, capr - counts[seg] + r)
        iters = search_iterations_for_error(np.abs(pred - pos))
        # one shared gap between consecutive arrays stands for both array ends
        glob = pos + np.repeat(np.cumsum(cap + 1) - (cap + 1), counts)
        shifts = gap_distances(glob, int(glob[-1]) + 2)
        S = np.bincount(seg, iters) / k
        I = np.bincount(seg, shifts) / k
        w = p.weights
        c = (w.w_s * S + w.w_i * I * p.insert_fraction) * k / self.n
        nb = sizing.DATA_NODE_META_BYTES + ((cap + 63) // 64) * 8
        return c, nb

    def total(self, cost_sum: float, bytes_sum: float, fanout_log2: int) -> float:
        w = self.p.weights
        inner = sizing.internal_node_bytes(1 << fanout_log2) if fanout_log2 else 0
        return cost_sum + (w.w_d if fanout_log2 else 0.0) + self.wb * (inner + bytes_sum)

    def level_total(self, L: int) -> float:
        lv = self.level(L)
        if L == 0 and lv.oversized[0]:
            return math.inf
        return self.total(float(lv.cost.sum()), float(lv.nbytes.sum()), L)

    def run(self) -> FanoutResult:
        p = self.p
        costs = {0: self.level_total(0)}
        best = 0
        L = 0
        while L < p.max_levels:
            L += 1
            costs[L] = self.level_total(L)
            if costs[L] < costs[best]:
                best = L
            # a level with oversized nodes is not a real candidate: keep growing
            if costs[L] > costs[L - 1] and not self.level(L - 1).oversized.any():
                break
            if np.diff(self.level(L).bounds).max() <= 1 and math.isfinite(costs[L]):
                break
        deepest = L
        cover = self._local_search(best, deepest)
        return self._result(cover, costs)

    def _local_search(self, best: int, deepest: int) -> dict:
        """Merge and split sweeps, level by level, until neither lowers the total.

        A merge replaces two sibling FT nodes by their parent, a split does
        the reverse. Decisions within one level are independent except for
        the fanout term, which only changes when the deepest level present
        changes; splits past the current deepest level are taken together
        only if their combined gain pays for the larger slot array.
        """
        present = {L: np.zeros(1 << L, dtype=bool) for L in range(deepest + 1)}
        present[best][:] = True
        lv = {L: self.level(L) for L in range(deepest + 1)}
        no_root = bool(lv[0].oversized[0])

        def unit(L):
            return lv[L].cost + self.wb * lv[L].nbytes

        def fanout_term(M):
            return (self.p.weights.w_d + self.wb * sizing.internal_node_bytes(1 << M)) if M else 0.0

        def max_level():
            return max(L for L, p in present.items() if p.any())

        changed = True
        while changed:
            changed = False
            for L in range(deepest, 0, -1):
                p = present[L]
                pairs = p[0::2] & p[1::2]
                if not pairs.any() or (L == 1 and no_root):
                    continue
                u = unit(L)
                delta = unit(L - 1) - u[0::2] - u[1::2]
                do = pairs & (delta < -1e-12)
                if L == max_level() and (p == np.repeat(pairs, 2)).all() and not do.all() \
                        and float(delta[pairs].sum()) + fanout_term(L - 1) - fanout_term(L) < -1e-12:
                    # merging every deepest pair pays off through the smaller fanout
                    do = pairs
                if do.any():
                    idx = np.flatnonzero(do)
                    p[2 * idx] = False
                    p[2 * idx + 1] = False
                    present[L - 1][idx] = True
                    changed = True
            for L in range(0, deepest):
                p = present[L]
                if not p.any():
                    continue
                kids = unit(L + 1)
                delta = kids[0::2] + kids[1::2] - unit(L)
                do = p & (delta < -1e-12)
                if not do.any():
                    continue
                M = max_level()
                if L + 1 > M and float(delta[do].sum()) + fanout_term(L + 1) - fanout_term(M) >= -1e-12:
                    continue
                idx = np.flatnonzero(do)
                p[idx] = False
                present[L + 1][2 * idx] = True
                present[L + 1][2 * idx + 1] = True
                changed = True
        return present

    def _result(self, present: dict, costs: dict) -> FanoutResult:
        cover = [(L, i) for L, p in present.items() for i in np.flatnonzero(p).tolist()]
        M = max(L for L, _ in cover)
        nodes = []
        for L, i in sorted(cover, key=lambda x: x[1] << (M - x[0])):
            lv = self.level(L)
            lo, hi = int(lv.bounds[i]), int(lv.bounds[i + 1])
            kr = (float(self.keys[lo]), float(self.keys[hi - 1])) if hi > lo else (math.nan, math.nan)
            nodes.append(FanoutTreeNode(L, i, kr, float(lv.cost[i]), hi - lo, lo, hi, bool(lv.oversized[i])))
        return FanoutResult(nodes, M, costs)


def build_fanout_tree(keys: np.ndarray, u: np.ndarray, region: Frame, params: FanoutParams) -> FanoutResult:
    """Covering set for the node whose keys ``keys`` (offsets ``u`` from the
    tree origin) all fall in slot 0 of ``region``."""
    return _FanoutTree(np.asarray(keys, dtype=np.float64), np.asarray(u, dtype=np.float64), region, params).run()
