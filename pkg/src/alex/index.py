"""The adaptive learned index: an RMI of internal nodes over gapped-array
data nodes, restructured on the fly by the cost model.

Routing is exact. Every internal node maps a key to a slot with
``(floor((key - origin) * scale) + offset) >> shift`` (see ``frames``), so a
key always reaches the one data node whose key space holds it.

The tree hangs under a ``top`` internal node. A one-slot top is transparent:
it only records the key space of a lone root data node, and it is counted
neither in depth nor in bytes.
"""

from __future__ import annotations

import math
from bisect import bisect_right as _bisect_right
from dataclasses import dataclass, field

import numpy as np

from . import sizing
from .cost_model import (DEFAULT_WEIGHTS, CostWeights, ExpectedStats, NodeStats,
                         deviation_detected, expected_stats, intra_cost,
                         intra_node_cost, traverse_cost, composite_index_cost)
from .fanout_tree import EMPTY_CAPACITY, FanoutParams, build_fanout_tree
from .frames import Frame, clamped_slots, run_frame
from .gapped_array import SENTINEL, GappedArray, object_array
from .linear_model import LinearModel, fit_progressive, predict_many

ACTIONS = ("expand_scale", "expand_retrain", "split_sideways", "split_downwards",
           "expand_append", "forced_split", "internal_split", "root_expand", "contract")
# outcomes of a fullness event; the others are side effects
RESOLUTIONS = ("expand_scale", "expand_retrain", "split_sideways", "split_downwards", "expand_append")


class DuplicateKeyError(KeyError):
    pass


@dataclass(frozen=True)
class AlexConfig:
    d_l: float = 0.6
    d_u: float = 0.8
    init_density: float = 0.7
    max_node_bytes: int = 16 << 20
    payload_bytes: int = 8
    weights: CostWeights = DEFAULT_WEIGHTS
    insert_fraction: float = 0.5           # assumed at bulk load
    key_space: tuple = (0.0, 2.0 ** 64)    # initial space of an empty index
    check_interval: int = 64
    catastrophic_shifts: float = 100.0
    empty_capacity: int = EMPTY_CAPACITY
    sampled_bulk_costs: bool = True        # ACC inside the fanout tree

    def __post_init__(self):
        if not 0 < self.d_l < self.d_u <= 1:
            raise ValueError("need 0 < d_l < d_u <= 1")
        if not 0 < self.init_density < self.d_u:
            raise ValueError("need 0 < init_density < d_u")
        if self.max_node_bytes < 64 * (sizing.KEY_BYTES + self.payload_bytes) + 8:
            raise ValueError("max_node_bytes too small for a minimal data node")
        lo, hi = self.key_space
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("key_space must be a finite non-empty interval")


class InternalNode:
    __slots__ = ("scale", "offset", "shift", "num_slots", "children", "parent", "slot_start", "slot_len")

    def __init__(self, frame: Frame, num_slots: int, children=None):
        self.scale, self.offset, self.shift = frame
        self.num_slots = num_slots
        self.children = children if children is not None else [None] * num_slots
        self.parent = None
        self.slot_start = 0
        self.slot_len = 1

    @property
    def frame(self) -> Frame:
        return Frame(self.scale, self.offset, self.shift)

    @frame.setter
    def frame(self, f: Frame):
        self.scale, self.offset, self.shift = f

    @property
    def depth(self) -> int:
        return _depth(self)


class DataNode:
    __slots__ = ("array", "keys", "payloads", "bitmap", "cap", "slope", "intercept", "expected", "parent", "slot_start", "slot_len",
                 "prev", "next", "limit", "n_lookups", "n_inserts", "cum_iters", "cum_shifts",
                 "max_key_seen", "min_key_seen", "right_appends", "left_appends",
                 "inserts_since_creation", "inserts_since_check", "shifts_since_check")

    def __init__(self, array: GappedArray, model: LinearModel, expected: ExpectedStats, d_u: float):
        self.parent = None
        self.slot_start = 0
        self.slot_len = 1
        self.prev = None
        self.next = None
        self.reset(array, model, expected, d_u)
        self.max_key_seen = array.max_key() if array.num_keys else -math.inf
        self.min_key_seen = array.min_key() if array.num_keys else math.inf
        self.right_appends = 0
        self.left_appends = 0
        self.inserts_since_creation = 0

    def reset(self, array, model, expected, d_u):
        self.array = array
        # read-path shortcuts; the array's lists are only rebound when a new array is built
        self.keys = array.keys
        self.payloads = array.payloads
        self.bitmap = array.bitmap
        self.cap = array.capacity
        self.slope = model.slope
        self.intercept = model.intercept
        self.expected = expected
        self.limit = int(math.floor(d_u * array.capacity + 1e-9))
        self.n_lookups = 0
        self.n_inserts = 0
        self.cum_iters = 0
        self.cum_shifts = 0
        self.inserts_since_check = 0
        self.shifts_since_check = 0

    @property
    def model(self) -> LinearModel:
        return LinearModel(self.slope, self.intercept)

    @property
    def stats(self) -> NodeStats:
        return NodeStats(self.cum_iters, self.n_lookups, self.cum_shifts, self.n_inserts)

    @property
    def capacity(self) -> int:
        return self.array.capacity

    @property
    def num_keys(self) -> int:
        return self.array.num_keys

    @property
    def depth(self) -> int:
        return _depth(self)

    def predict(self, key: float) -> int:
        p = self.slope * key + self.intercept
        if p < 0:
            return 0
        cap = self.array.capacity
        if p >= cap:
            return cap - 1
        return int(p)

    def insert_fraction(self, default: float) -> float:
        ops = self.n_lookups + self.n_inserts
        return self.n_inserts / ops if ops else default


_Internal = InternalNode
_floor = math.floor


def _depth(node) -> int:
    d = 0
    p = node.parent
    while p is not None:
        if p.parent is not None or p.num_slots > 1:
            d += 1
        p = p.parent
    return d


@dataclass
class IndexReport:
    num_keys: int
    num_data_nodes: int
    num_internal_nodes: int
    max_depth: int
    avg_depth: float
    min_data_node_bytes: int
    median_data_node_bytes: float
    max_data_node_bytes: int
    data_node_capacities: list
    index_bytes: int
    data_bytes: int
    structure_bytes: int
    action_counts: dict
    violations: list = field(default_factory=list)

    def as_dict(self, with_capacities: bool = False) -> dict:
        d = dict(self.__dict__)
        if not with_capacities:
            d.pop("data_node_capacities")
        return d


class AlexIndex:
    """Ordered map from float keys to payloads."""

    def __init__(self, config: AlexConfig | None = None, **overrides):
        if config is None:
            config = AlexConfig(**overrides)
        elif overrides:
            raise TypeError("pass either a config or keyword overrides")
        self.config = config
        self.weights = config.weights
        self._d_u = config.d_u
        self._max_slots = sizing.max_internal_slots(config.max_node_bytes)
        self._max_cap = sizing.max_data_capacity(config.max_node_bytes, config.payload_bytes)
        self._init_empty(*config.key_space)

    # ------------------------------------------------------------------
    # bookkeeping

    def _reset_counters(self):
        self.num_keys = 0
        self.num_data_nodes = 0
        self.num_internal_nodes = 0
        self._internal_bytes = 0      # every internal node, transparent top included
        self._bitmap_bytes = 0
        self._slot_capacity = 0
        self.action_counts = {a: 0 for a in ACTIONS}
        self.fullness_events = 0
        self.insert_shifts = 0

    def _add_leaf(self, node: DataNode):
        self.num_data_nodes += 1
        self._bitmap_bytes += sizing.bitmap_bytes(node.array.capacity)
        self._slot_capacity += node.array.capacity

    def _drop_leaf(self, node: DataNode):
        self.num_data_nodes -= 1
        self._bitmap_bytes -= sizing.bitmap_bytes(node.array.capacity)
        self._slot_capacity -= node.array.capacity

    def _set_array(self, node: DataNode, array: GappedArray, model: LinearModel, expected: ExpectedStats):
        self._bitmap_bytes += sizing.bitmap_bytes(array.capacity) - sizing.bitmap_bytes(node.array.capacity)
        self._slot_capacity += array.capacity - node.array.capacity
        node.reset(array, model, expected, self._d_u)

    def _add_inner(self, node: InternalNode):
        self.num_internal_nodes += 1
        self._internal_bytes += sizing.internal_node_bytes(node.num_slots)

    def _drop_inner(self, node: InternalNode):
        self.num_internal_nodes -= 1
        self._internal_bytes -= sizing.internal_node_bytes(node.num_slots)

    def _top_is_transparent(self) -> bool:
        return self.top.num_slots == 1

    @property
    def internal_bytes(self) -> int:
        b = self._internal_bytes
        if self._top_is_transparent():
            b -= sizing.internal_node_bytes(1)
        return b

    @property
    def index_bytes(self) -> int:
        """Models and metadata: internal nodes plus per-data-node metadata."""
        return self.internal_bytes + self.num_data_nodes * sizing.DATA_NODE_META_BYTES

    @property
    def data_bytes(self) -> int:
        """Key and payload slots, gaps included, plus occupancy bitmaps."""
        return self._slot_capacity * (sizing.KEY_BYTES + self.config.payload_bytes) + self._bitmap_bytes

    @property
    def structure_bytes(self) -> int:
        """Bytes charged by the traverse cost: everything but key/payload slots."""
        return self.index_bytes + self._bitmap_bytes

    @property
    def num_inner_nodes(self) -> int:
        return self.num_internal_nodes - (1 if self._top_is_transparent() else 0)

    def __len__(self) -> int:
        return self.num_keys

    # ------------------------------------------------------------------
    # construction

    def _init_empty(self, lo: float, hi: float):
        self._reset_counters()
        self.origin = float(lo)
        scale = 1.0 / (hi - lo)
        while (hi - lo) * scale > 1.0:
            scale = math.nextafter(scale, 0.0)
        self.top = InternalNode(Frame(scale, 0, 0), 1)
        self._add_inner(self.top)
        leaf = self._empty_leaf(self.top.frame, 0, 1, self.config.insert_fraction)
        self._attach(self.top, leaf, 0, 1)
        self.head = self.tail = leaf

    def _attach(self, parent: InternalNode, child, start: int, length: int):
        child.parent = parent
        child.slot_start = start
        child.slot_len = length
        parent.children[start:start + length] = [child] * length

    def _key_bounds(self, frame: Frame, start: int, length: int) -> tuple[float, float]:
        return frame.key_bounds(self.origin, start, length)

    def _empty_leaf(self, frame: Frame, start: int, length: int, F: float) -> DataNode:
        cap = self.config.empty_capacity
        lo, hi = self._key_bounds(frame, start, length)
        slope = cap / (hi - lo) if hi > lo else 0.0
        intercept = -lo * slope
        if not (math.isfinite(slope) and math.isfinite(intercept)):
            slope, intercept = 0.0, 0.0
        node = DataNode(GappedArray(cap), LinearModel(slope, intercept), ExpectedStats(0.0, 0.0, F), self._d_u)
        self._add_leaf(node)
        return node

    def creation_capacity(self, n: int) -> int:
        if n == 0:
            return self.config.empty_capacity
        return max(math.ceil(n / self.config.init_density - 1e-9), math.ceil((n + 1) / self._d_u - 1e-9))

    def expansion_capacity(self, n: int) -> int:
        return max(math.ceil(n / self.config.d_l - 1e-9), math.ceil((n + 1) / self._d_u - 1e-9))

    def _fits(self, n: int) -> bool:
        return math.ceil((n + 1) / self._d_u - 1e-9) <= self._max_cap

    def _leaf_from_keys(self, keys: np.ndarray, payloads, frame: Frame, start: int, length: int,
                        F: float) -> DataNode:
        n = len(keys)
        if n == 0:
            return self._empty_leaf(frame, start, length, F)
        cap = min(self.creation_capacity(n), self._max_cap)
        model = fit_progressive(keys).scale(cap / n)
        arr = GappedArray.build_model_based(keys, payloads, model, cap)
        node = DataNode(arr, model, expected_stats(keys, model, cap, F), self._d_u)
        self._add_leaf(node)
        return node

    def bulk_load(self, keys, payloads=None) -> "AlexIndex":
        """Replace the contents with sorted, unique ``keys``."""
        keys = np.asarray(keys, dtype=np.float64)
        if keys.ndim != 1:
            raise ValueError("keys must be one-dimensional")
        n = keys.size
        if payloads is not None:
            payloads = object_array(payloads)
            if len(payloads) != n:
                raise ValueError("keys and payloads differ in length")
        if n and not np.all(np.isfinite(keys)):
            raise ValueError("keys must be finite")
        if n > 1 and not np.all(keys[1:] > keys[:-1]):
            raise ValueError("keys must be strictly increasing")
        if n == 0:
            self._init_empty(*self.config.key_space)
            return self
        self._reset_counters()
        self.origin = float(keys[0])
        width = float(keys[-1] - keys[0])
        scale = 1.0 / width if width > 0 else 1.0
        u = keys - self.origin
        while float(u[-1]) * scale >= 1.0:
            scale = math.nextafter(scale, 0.0)
        region = Frame(scale, 0, 0)
        params = FanoutParams(self.weights, self.config.init_density, self._d_u, self.config.payload_bytes,
                              self.config.max_node_bytes, self._max_slots.bit_length() - 1,
                              self.config.insert_fraction, n, self.config.sampled_bulk_costs)
        leaves = []
        root = self._bulk_node(keys, u, payloads, region, params, leaves)
        if isinstance(root, DataNode):
            self.top = InternalNode(region, 1)
            self._add_inner(self.top)
            self._attach(self.top, root, 0, 1)
        else:
            self.top = root
        self._link(None, leaves, None)
        self.head, self.tail = leaves[0], leaves[-1]
        self.num_keys = n
        return self

    def _bulk_node(self, keys, u, payloads, region: Frame, params: FanoutParams, leaves: list):
        """Subtree for the keys in slot 0 of ``region``."""
        F = self.config.insert_fraction
        n = len(keys)
        if n == 0:
            leaf = self._empty_leaf(region, 0, 1, F)
            leaves.append(leaf)
            return leaf
        res = build_fanout_tree(keys, u, region, params)
        if res.fanout_log2 == 0:
            leaf = self._leaf_from_keys(keys, payloads, region, 0, 1, F)
            leaves.append(leaf)
            return leaf
        M = res.fanout_log2
        node = InternalNode(region.refine(M), 1 << M)
        self._add_inner(node)
        frame = node.frame
        for ft in res.nodes:
            length = 1 << (M - ft.level)
            start = ft.index_in_level * length
            lo, hi = ft.start, ft.stop
            child = self._bulk_node(keys[lo:hi], u[lo:hi], None if payloads is None else payloads[lo:hi],
                                    run_frame(frame, start, length, 0), params, leaves)
            self._attach(node, child, start, length)
        return node

    @staticmethod
    def _link(prev, leaves, nxt):
        chain = [prev] + leaves + [nxt]
        for a, b in zip(chain, chain[1:]):
            if a is not None:
                a.next = b
            if b is not None:
                b.prev = a

    def _splice_leaves(self, old: DataNode, leaves: list):
        self._link(old.prev, leaves, old.next)
        if self.head is old:
            self.head = leaves[0]
        if self.tail is old:
            self.tail = leaves[-1]

    # ------------------------------------------------------------------
    # routing

    def _leaf(self, key: float) -> DataNode:
        node = self.top
        u = key - self.origin
        try:
            while node.__class__ is InternalNode:
                s = (math.floor(u * node.scale) + node.offset) >> node.shift
                if s < 0:
                    s = 0
                elif s >= node.num_slots:
                    s = node.num_slots - 1
                node = node.children[s]
        except (OverflowError, ValueError):
            return self.head if u < 0 else self.tail
        return node

    def _top_slot(self, key: float) -> int:
        t = self.top
        v = (key - self.origin) * t.scale
        if not math.isfinite(v):
            return -1 if v < 0 else t.num_slots
        return (math.floor(v) + t.offset) >> t.shift

    # ------------------------------------------------------------------
    # point operations

    def get(self, key, default=None):
        if key.__class__ is not float:
            key = float(key)
        node = self.top
        u = key - self.origin
        try:
            while node.__class__ is _Internal:
                s = (_floor(u * node.scale) + node.offset) >> node.shift
                if s < 0:
                    s = 0
                elif s >= node.num_slots:
                    s = node.num_slots - 1
                node = node.children[s]
        except (OverflowError, ValueError):
            return default
        p = node.slope * key + node.intercept
        if p < 0:
            p = 0
        elif p >= node.cap:
            p = node.cap - 1
        else:
            p = int(p)
        node.n_lookups += 1
        keys = node.keys
        k = keys[p]
        if k == key and node.bitmap[p]:
            return node.payloads[p]
        # Galloping search in 16x windows with C bisect. It lands on the same
        # slot as the exponential search, whose iteration count for a target
        # d slots away is d.bit_length().
        if k <= key:
            lo = p
            step = 16
            hi = p + step
            cap = node.cap
            while hi < cap and keys[hi] <= key:
                lo = hi
                step <<= 4
                hi = p + step
            pos = _bisect_right(keys, key, lo, hi if hi < cap else cap) - 1
            node.cum_iters += (pos - p).bit_length()
        else:
            hi = p
            step = 16
            lo = p - step
            while lo >= 0 and keys[lo] > key:
                hi = lo
                step <<= 4
                lo = p - step
            pos = _bisect_right(keys, key, lo if lo > 0 else 0, hi) - 1
            node.cum_iters += (p - pos).bit_length()
        if pos >= 0 and keys[pos] == key:
            return node.payloads[pos]
        return default

    lookup = get

    def __contains__(self, key) -> bool:
        return self._locate(float(key))[1] >= 0

    def __getitem__(self, key):
        node, pos = self._locate(float(key))
        if pos < 0:
            raise KeyError(key)
        return node.array.payloads[pos]

    def _locate(self, key: float):
        """(leaf, occupied slot or -1), counted as a lookup."""
        node = self._leaf(key)
        pos, it = node.array.find(node.predict(key), key)
        node.n_lookups += 1
        node.cum_iters += it
        return node, pos

    def update(self, key, payload) -> bool:
        node, pos = self._locate(float(key))
        if pos < 0:
            return False
        node.array.payloads[pos] = payload
        return True

    def insert(self, key, payload=None) -> None:
        key = float(key)
        if not math.isfinite(key):
            raise ValueError(f"key {key} is not finite")
        s = self._top_slot(key)
        if s < 0 or s >= self.top.num_slots:
            self._expand_root(key)
        node = self._leaf(key)
        arr = node.array
        if arr.num_keys + 1 > node.limit:
            if node.array.find(node.predict(key), key)[0] >= 0:
                raise DuplicateKeyError(key)
            self.fullness_events += 1
            self._resolve_full(node, key)
            node = self._leaf(key)
            arr = node.array
        pos, it, exists = arr.insert_position(node.predict(key), key)
        if exists:
            raise DuplicateKeyError(key)
        shifts = arr.insert_at(pos, key, payload)
        self.num_keys += 1
        node.n_inserts += 1
        node.cum_iters += it
        node.cum_shifts += shifts
        self.insert_shifts += shifts
        node.inserts_since_creation += 1
        if key > node.max_key_seen:
            node.max_key_seen = key
            node.right_appends += 1
        if key < node.min_key_seen:
            node.min_key_seen = key
            node.left_appends += 1
        node.shifts_since_check += shifts
        node.inserts_since_check += 1
        if node.inserts_since_check >= self.config.check_interval:
            self._periodic_check(node)

    def delete(self, key) -> bool:
        node, pos = self._locate(float(key))
        if pos < 0:
            return False
        arr = node.array
        arr.erase_at(pos)
        self.num_keys -= 1
        if arr.num_keys < self.config.d_l * arr.capacity:
            self._contract(node)
        return True

    def range_query(self, start_key, end_key=None, count: int | None = None) -> list:
        """Pairs with ``start_key <= key < end_key``, at most ``count`` of them."""
        start_key = float(start_key)
        out = []
        if count is not None and count <= 0:
            return out
        node = self._leaf(start_key)
        pos, _ = node.array.exponential_search(node.predict(start_key), start_key)
        left = count
        while node is not None:
            for item in node.array.scan(pos, end_key, left):
                out.append(item)
            if left is not None:
                left = count - len(out)
                if left <= 0:
                    break
            if end_key is not None and node.next is not None and node.array.num_keys \
                    and node.array.max_key() >= end_key:
                break
            node = node.next
            pos = 0
        return out

    def items(self):
        node = self.head
        while node is not None:
            yield from node.array.scan()
            node = node.next

    def keys(self):
        for k, _ in self.items():
            yield k

    # ------------------------------------------------------------------
    # out-of-bounds keys

    def _expand_root(self, key: float):
        while True:
            t = self.top
            s = self._top_slot(key)
            if 0 <= s < t.num_slots:
                return
            right = s >= t.num_slots
            self.action_counts["root_expand"] += 1
            if t.num_slots == 1:
                # lone root data node: widen its key space
                f = t.frame
                t.frame = f.coarsened(2, 0) if right else Frame(f.scale, f.offset + (1 << f.shift), f.shift + 1)
                continue
            N = t.num_slots
            if N < self._max_slots:
                need = s + 1 if right else N - s
                new_n = N
                while new_n < need and new_n < self._max_slots:
                    new_n *= 2
                self._grow_root(new_n, right)
                continue
            # root at max size: new root with the old one as a single child
            nt = InternalNode(t.frame.coarsened(N, 0 if right else 1), 2)
            self._add_inner(nt)
            F = self.config.insert_fraction
            self._attach(nt, t, 0 if right else 1, 1)
            leaf = self._empty_leaf(nt.frame, 1 if right else 0, 1, F)
            self._attach(nt, leaf, 1 if right else 0, 1)
            self.top = nt
            self._add_edge_leaves([leaf], right)

    def _grow_root(self, new_n: int, right: bool):
        t = self.top
        N = t.num_slots
        self._internal_bytes += sizing.POINTER_BYTES * (new_n - N)
        F = self.config.insert_fraction
        if right:
            t.children.extend([None] * (new_n - N))
            t.num_slots = new_n
            leaves = []
            run = N
            while run < new_n:
                leaf = self._empty_leaf(t.frame, run, run, F)
                self._attach(t, leaf, run, run)
                leaves.append(leaf)
                run *= 2
            self._add_edge_leaves(leaves, True)
        else:
            d = new_n - N
            f = t.frame
            t.frame = Frame(f.scale, f.offset + (d << f.shift), f.shift)
            t.children[0:0] = [None] * d
            t.num_slots = new_n
            for child in _distinct(t.children[d:]):
                child.slot_start += d
            leaves = []
            length = N
            while length <= new_n // 2:
                leaf = self._empty_leaf(t.frame, new_n - 2 * length, length, F)
                self._attach(t, leaf, new_n - 2 * length, length)
                leaves.append(leaf)
                length *= 2
            leaves.reverse()
            self._add_edge_leaves(leaves, False)

    def _add_edge_leaves(self, leaves: list, right: bool):
        if right:
            self._link(self.tail, leaves, None)
            self.tail = leaves[-1]
        else:
            self._link(None, leaves, self.head)
            self.head = leaves[0]

    # ------------------------------------------------------------------
    # fullness

    def _resolve_full(self, node: DataNode, key: float):
        if self._try_append_expand(node):
            return
        keys = node.array.occupied_keys()
        n = keys.size
        w = self.weights
        F = node.insert_fraction(node.expected.insert_fraction)
        expected = intra_cost(node.expected.search_iters, node.expected.shifts, F, w)
        empirical = intra_node_cost(node.stats, w)
        new_cap = self.expansion_capacity(n)
        if not deviation_detected(expected, empirical, w) and new_cap <= self._max_cap:
            self._expand(node, keys, new_cap, retrain=False)
            self.action_counts["expand_scale"] += 1
            return
        options = self.fullness_options(node, keys=keys)
        self._execute(node, min(options, key=options.get), keys)

    def _execute(self, node: DataNode, choice: str, keys=None):
        if keys is None:
            keys = node.array.occupied_keys()
        if choice == "expand_retrain":
            self._expand(node, keys, self.expansion_capacity(keys.size), retrain=True)
        elif choice == "split_sideways":
            self._split_sideways(node, keys)
        else:
            self._split_downwards(node, keys)
        self.action_counts[choice] += 1

    def _try_append_expand(self, node: DataNode) -> bool:
        arr = node.array
        n = arr.num_keys
        made = node.inserts_since_creation
        right = node.next is None and 2 * node.right_appends > made
        left = node.prev is None and 2 * node.left_appends > made
        if not (right or left):
            return False
        new_cap = self.expansion_capacity(n)
        if new_cap > self._max_cap:
            return False
        extra = new_cap - arr.capacity
        model = node.model
        if right:
            arr.keys.extend([SENTINEL] * extra)
            arr.payloads.extend([None] * extra)
            arr.bitmap.extend(bytes(extra))
        else:
            arr.keys[0:0] = [arr.keys[0]] * extra
            arr.payloads[0:0] = [None] * extra
            arr.bitmap[0:0] = bytes(extra)
            model = LinearModel(model.slope, model.intercept + extra)
        old = arr.capacity
        arr.capacity = new_cap
        self._bitmap_bytes += sizing.bitmap_bytes(new_cap) - sizing.bitmap_bytes(old)
        self._slot_capacity += extra
        node.reset(arr, model, node.expected, self._d_u)
        self.action_counts["expand_append"] += 1
        return True

    def _expand(self, node: DataNode, keys: np.ndarray, new_cap: int, retrain: bool):
        arr = node.array
        payloads = arr.occupied_payloads()
        F = node.insert_fraction(node.expected.insert_fraction)
        if retrain:
            model = fit_progressive(keys).scale(new_cap / keys.size)
            expected = expected_stats(keys, model, new_cap, F)
        else:
            model = node.model.scale(new_cap / arr.capacity)
            expected = node.expected
        new = GappedArray.build_model_based(keys, payloads, model, new_cap)
        self._set_array(node, new, model, expected)

    def _contract(self, node: DataNode):
        arr = node.array
        n = arr.num_keys
        target = (self.config.d_l + self._d_u) / 2
        new_cap = max(self.config.empty_capacity, math.ceil(n / target - 1e-9), math.ceil((n + 1) / self._d_u - 1e-9))
        if new_cap >= arr.capacity:
            return
        keys = arr.occupied_keys()
        model = node.model.scale(new_cap / arr.capacity)
        new = GappedArray.build_model_based(keys, arr.occupied_payloads(), model, new_cap)
        self._set_array(node, new, model, node.expected)
        self.action_counts["contract"] += 1

    def _periodic_check(self, node: DataNode):
        avg = node.shifts_since_check / node.inserts_since_check
        node.inserts_since_check = 0
        node.shifts_since_check = 0
        if avg > self.config.catastrophic_shifts and node.array.num_keys > 1:
            options = self.fullness_options(node, forced=True)
            self._execute(node, min(options, key=options.get))
            self.action_counts["forced_split"] += 1

    def _split_point(self, node: DataNode, keys: np.ndarray) -> int:
        """Number of ``keys`` in the lower half of the node's key space."""
        sub = run_frame(node.parent.frame, node.slot_start, node.slot_len, 1)
        slots = clamped_slots(sub, keys - self.origin, 2)
        return int(np.searchsorted(slots, 1))

    def fullness_options(self, node: DataNode, keys=None, forced: bool = False) -> dict:
        """Change in the global cost for each way of resolving ``node``.

        Costs are key-weighted by the whole index's key count, so they add up
        the way the normalized index cost does.
        """
        if keys is None:
            keys = node.array.occupied_keys()
        w = self.weights
        n = keys.size
        K = max(self.num_keys, n, 1)
        F = node.insert_fraction(node.expected.insert_fraction)
        old_cap = node.array.capacity
        old_bytes = sizing.DATA_NODE_META_BYTES + sizing.bitmap_bytes(old_cap)
        opts = {}
        if not forced and n:
            cap = self.expansion_capacity(n)
            if cap <= self._max_cap:
                model = fit_progressive(keys).scale(cap / n)
                st = expected_stats(keys, model, cap, F)
                opts["expand_retrain"] = intra_node_cost(st, w) * n / K \
                    + w.w_b * (sizing.bitmap_bytes(cap) - sizing.bitmap_bytes(old_cap))
        m = self._split_point(node, keys)
        intra = 0.0
        nbytes = 0
        for part in (keys[:m], keys[m:]):
            c, b = self._new_node_cost(part, F, K)
            intra += c
            nbytes += b
        split_bytes = nbytes - old_bytes
        P = node.parent
        transparent = P is self.top and P.num_slots == 1
        if not transparent:
            extra = 0
            penalty = 0.0
            if node.slot_len == 1:
                if P.num_slots < self._max_slots:
                    extra = P.num_slots * sizing.POINTER_BYTES
                else:
                    extra = sizing.INTERNAL_META_BYTES + (P.num_slots // 2) * sizing.POINTER_BYTES
                    if P is self.top:
                        extra += sizing.internal_node_bytes(2)
                        penalty = w.w_d
            opts["split_sideways"] = intra + penalty + w.w_b * (split_bytes + extra)
        opts["split_downwards"] = intra + w.w_d * n / K + w.w_b * (split_bytes + sizing.internal_node_bytes(2))
        return opts

    def _new_node_cost(self, keys: np.ndarray, F: float, K: int) -> tuple[float, int]:
        k = keys.size
        if k == 0:
            return 0.0, sizing.DATA_NODE_META_BYTES + sizing.bitmap_bytes(self.config.empty_capacity)
        cap = min(self.creation_capacity(k), self._max_cap)
        model = fit_progressive(keys).scale(cap / k)
        c = intra_node_cost(expected_stats(keys, model, cap, F), self.weights) * k / K
        if not self._fits(k):
            # would need further splitting: at least one more level
            c += self.weights.w_d * k / K
        return c, sizing.DATA_NODE_META_BYTES + sizing.bitmap_bytes(cap)

    # ------------------------------------------------------------------
    # splits

    def _double(self, node: InternalNode):
        old = node.children
        node.children = [c for c in old for _ in (0, 1)]
        self._internal_bytes += sizing.POINTER_BYTES * node.num_slots
        node.num_slots *= 2
        node.frame = node.frame.doubled()
        for child in _distinct(old):
            child.slot_start *= 2
            child.slot_len *= 2

    def _split_internal(self, P: InternalNode):
        """Split a full internal node into two halves under its parent."""
        N = P.num_slots
        h = N // 2
        f = P.frame
        left = InternalNode(f, h, P.children[:h])
        right = InternalNode(Frame(f.scale, f.offset - (h << f.shift), f.shift), h, P.children[h:])
        for child in _distinct(left.children):
            child.parent = left
        for child in _distinct(right.children):
            child.parent = right
            child.slot_start -= h
        self._drop_inner(P)
        self._add_inner(left)
        self._add_inner(right)
        G = P.parent
        if G is None:
            nt = InternalNode(f.coarsened(h, 0), 2)
            self._add_inner(nt)
            self._attach(nt, left, 0, 1)
            self._attach(nt, right, 1, 1)
            self.top = nt
        else:
            if P.slot_len == 1:
                if G.num_slots >= self._max_slots:
                    self._split_internal(G)
                    G = P.parent
                self._double(G)
            s, L = P.slot_start, P.slot_len
            self._attach(G, left, s, L // 2)
            self._attach(G, right, s + L // 2, L // 2)
        self.action_counts["internal_split"] += 1

    def _children_for(self, node: DataNode, keys: np.ndarray, parent: InternalNode, start: int, length: int):
        """Build the two halves of ``node``'s keys into parent slots
        [start, start+length) and splice them into the leaf chain."""
        F = node.insert_fraction(node.expected.insert_fraction)
        payloads = object_array(node.array.occupied_payloads())
        frame = parent.frame
        h = length // 2
        slots = clamped_slots(run_frame(frame, start, length, 1), keys - self.origin, 2)
        m = int(np.searchsorted(slots, 1))
        leaves = []
        self._drop_leaf(node)
        for lo, hi, s in ((0, m, start), (m, keys.size, start + h)):
            child = self._subtree(keys[lo:hi], payloads[lo:hi], frame, s, h, F, leaves)
            self._attach(parent, child, s, h)
        self._splice_leaves(node, leaves)

    def _subtree(self, keys, payloads, frame: Frame, start: int, length: int, F: float, leaves: list):
        """A data node for the keys of ``frame`` slots [start, start+length), or a
        two-way internal node if they do not fit in one."""
        if self._fits(keys.size):
            leaf = self._leaf_from_keys(keys, payloads, frame, start, length, F)
            leaves.append(leaf)
            return leaf
        node = InternalNode(run_frame(frame, start, length, 1), 2)
        self._add_inner(node)
        sub = node.frame
        slots = clamped_slots(sub, keys - self.origin, 2)
        m = int(np.searchsorted(slots, 1))
        for lo, hi, s in ((0, m, 0), (m, keys.size, 1)):
            child = self._subtree(keys[lo:hi], payloads[lo:hi], sub, s, 1, F, leaves)
            self._attach(node, child, s, 1)
        return node

    def _split_sideways(self, node: DataNode, keys: np.ndarray):
        P = node.parent
        if node.slot_len == 1:
            if P.num_slots >= self._max_slots:
                self._split_internal(P)
                P = node.parent
            self._double(P)
        self._children_for(node, keys, P, node.slot_start, node.slot_len)

    def _split_downwards(self, node: DataNode, keys: np.ndarray):
        P = node.parent
        if P is self.top and P.num_slots == 1:
            self._double(P)
            self._children_for(node, keys, P, 0, 2)
            return
        D = InternalNode(run_frame(P.frame, node.slot_start, node.slot_len, 1), 2)
        self._add_inner(D)
        self._attach(P, D, node.slot_start, node.slot_len)
        self._children_for(node, keys, D, 0, 2)

    # ------------------------------------------------------------------
    # inspection

    def data_nodes(self):
        node = self.head
        while node is not None:
            yield node
            node = node.next

    def internal_nodes(self):
        stack = [self.top]
        while stack:
            node = stack.pop()
            yield node
            for c in _distinct(node.children):
                if isinstance(c, InternalNode):
                    stack.append(c)

    def prediction_errors(self, dense: bool = False) -> np.ndarray:
        """|predicted slot - actual slot| for every stored key.

        With ``dense`` the same per-node model, rescaled from the node's
        capacity to its key count, is evaluated against a gap-free layout.
        """
        out = []
        for node in self.data_nodes():
            arr = node.array
            k = arr.num_keys
            if not k:
                continue
            keys = arr.occupied_keys()
            if dense:
                model = node.model.scale(k / arr.capacity)
                out.append(np.abs(predict_many(model, keys, k) - np.arange(k)))
            else:
                out.append(np.abs(predict_many(node.model, keys, arr.capacity) - arr.occupied_positions()))
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

    def composite_cost(self) -> float:
        struct = self.structure_bytes
        costs, counts = [], []
        for node in self.data_nodes():
            costs.append(intra_node_cost(node.expected, self.weights)
                         + traverse_cost(node.depth, struct, self.weights))
            counts.append(node.array.num_keys)
        return composite_index_cost(costs, counts)

    def report(self, check: bool = True) -> IndexReport:
        leaves = list(self.data_nodes())
        depths = [n.depth for n in leaves]
        sizes = sorted(sizing.data_node_bytes(n.array.capacity, self.config.payload_bytes) for n in leaves)
        keyed = sum(d * n.array.num_keys for d, n in zip(depths, leaves))
        return IndexReport(
            num_keys=self.num_keys,
            num_data_nodes=len(leaves),
            num_internal_nodes=self.num_inner_nodes,
            max_depth=max(depths),
            avg_depth=keyed / self.num_keys if self.num_keys else 0.0,
            min_data_node_bytes=sizes[0],
            median_data_node_bytes=float(np.median(sizes)),
            max_data_node_bytes=sizes[-1],
            data_node_capacities=[n.array.capacity for n in leaves],
            index_bytes=self.index_bytes,
            data_bytes=self.data_bytes,
            structure_bytes=self.structure_bytes,
            action_counts=dict(self.action_counts, fullness_events=self.fullness_events),
            violations=self.audit() if check else [],
        )

    def audit(self, check_routing: bool = True) -> list[str]:
        """Every structural invariant; returns human-readable violations."""
        problems = []
        internal_bytes = 0
        n_inner = 0
        stack = [self.top]
        if self.top.parent is not None:
            problems.append("top has a parent")
        while stack:
            node = stack.pop()
            n_inner += 1
            internal_bytes += sizing.internal_node_bytes(node.num_slots)
            N = node.num_slots
            if N & (N - 1) or N > self._max_slots or len(node.children) != N:
                problems.append(f"internal node with bad slot count {N}")
                continue
            i = 0
            kids = []
            while i < N:
                c = node.children[i]
                L = c.slot_len
                if c.parent is not node or c.slot_start != i or L & (L - 1) or i % L:
                    problems.append(f"child run at slot {i} of a {N}-slot node is misaligned or mislinked")
                    break
                if any(x is not c for x in node.children[i:i + L]):
                    problems.append(f"child run at slot {i} is not contiguous")
                kids.append(c)
                i += L
            stack.extend(c for c in kids if isinstance(c, InternalNode))
        leaves = _flatten_leaves(self.top)
        chain = list(self.data_nodes())
        if len(chain) != len(leaves) or any(a is not b for a, b in zip(chain, leaves)):
            problems.append("leaf sibling chain does not match tree order")
        if self.tail is not (leaves[-1] if leaves else None):
            problems.append("tail pointer is stale")
        if n_inner != self.num_internal_nodes:
            problems.append(f"internal node count {self.num_internal_nodes} != {n_inner}")
        if internal_bytes != self._internal_bytes:
            problems.append(f"internal bytes {self._internal_bytes} != {internal_bytes}")
        if len(leaves) != self.num_data_nodes:
            problems.append(f"data node count {self.num_data_nodes} != {len(leaves)}")
        bitmaps = sum(sizing.bitmap_bytes(n.array.capacity) for n in leaves)
        slots = sum(n.array.capacity for n in leaves)
        if bitmaps != self._bitmap_bytes or slots != self._slot_capacity:
            problems.append("data node byte totals disagree with a recount")
        total = 0
        prev_max = -math.inf
        for node in leaves:
            arr = node.array
            for p in arr.audit():
                problems.append(f"data node: {p}")
            total += arr.num_keys
            if arr.num_keys > node.limit or node.limit > self._d_u * arr.capacity + 1e-9:
                problems.append(f"data node over d_u: {arr.num_keys}/{arr.capacity}")
            if sizing.data_node_bytes(arr.capacity, self.config.payload_bytes) > self.config.max_node_bytes:
                problems.append(f"data node of capacity {arr.capacity} exceeds max_node_bytes")
            if arr.num_keys:
                if arr.min_key() <= prev_max:
                    problems.append("data nodes out of key order")
                prev_max = arr.max_key()
                if check_routing:
                    for k in arr.occupied_keys().tolist():
                        if self._leaf(k) is not node:
                            problems.append(f"key {k} routes to another data node")
                            break
            if len(problems) > 50:
                break
        if total != self.num_keys:
            problems.append(f"num_keys {self.num_keys} != stored {total}")
        return problems


def _distinct(children):
    out = []
    last = None
    for c in children:
        if c is not last and c is not None:
            out.append(c)
            last = c
    return out


def _flatten_leaves(root) -> list:
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, DataNode):
            out.append(node)
        else:
            stack.extend(reversed(_distinct(node.children)))
    return out
