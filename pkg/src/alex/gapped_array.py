"""Gapped array: a sorted slot array with interspersed gaps.

Each gap holds a copy of the closest occupied key to its right, and gaps past
the last key hold ``SENTINEL``. The key slots are therefore non-decreasing end
to end, so searches never consult the occupancy bitmap.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right

import numpy as np

from .linear_model import LinearModel, predict_many

SENTINEL = math.inf


def model_based_positions(keys: np.ndarray, model: LinearModel, capacity: int) -> np.ndarray:
    """Slots chosen by model-based placement, without building the array.

    Key i goes to ``max(pred_i, pos_{i-1} + 1)``; if the tail would run off the
    end, the last keys are packed into the final slots.
    """
    n = len(keys)
    if n > capacity:
        raise ValueError(f"{n} keys do not fit in {capacity} slots")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    pred = predict_many(model, keys, capacity)
    idx = np.arange(n, dtype=np.int64)
    pos = np.maximum.accumulate(pred - idx) + idx
    np.minimum(pos, capacity - n + idx, out=pos)
    return pos


def filled_key_slots(keys: np.ndarray, positions: np.ndarray, capacity: int) -> np.ndarray:
    slots = np.full(capacity, SENTINEL)
    slots[positions] = keys
    return np.minimum.accumulate(slots[::-1])[::-1]


def object_array(values) -> np.ndarray:
    """1-d object array of ``values``; tuples and lists stay single elements."""
    if isinstance(values, np.ndarray) and values.dtype == object and values.ndim == 1:
        return values
    return np.fromiter(values, dtype=object, count=len(values))


class GappedArray:
    """Fixed-capacity slot array. Keys and payloads live in Python lists so
    shifts are single ``memmove``-backed slice assignments."""

    __slots__ = ("capacity", "keys", "payloads", "bitmap", "num_keys")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.keys = [SENTINEL] * capacity
        self.payloads = [None] * capacity
        self.bitmap = bytearray(capacity)
        self.num_keys = 0

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_positions(cls, keys: np.ndarray, payloads, positions: np.ndarray,
                       capacity: int) -> "GappedArray":
        arr = cls.__new__(cls)
        arr.capacity = capacity
        arr.num_keys = len(keys)
        arr.keys = filled_key_slots(keys, positions, capacity).tolist()
        bitmap = np.zeros(capacity, dtype=np.uint8)
        bitmap[positions] = 1
        arr.bitmap = bytearray(bitmap.tobytes())
        if payloads is None:
            arr.payloads = [None] * capacity
        else:
            slots = np.empty(capacity, dtype=object)
            slots[positions] = object_array(payloads)
            arr.payloads = slots.tolist()
        return arr

    @classmethod
    def build_model_based(cls, keys, payloads, model: LinearModel, capacity: int) -> "GappedArray":
        keys = np.asarray(keys, dtype=np.float64)
        if len(keys) > 1 and not np.all(keys[1:] > keys[:-1]):
            raise ValueError("keys must be strictly increasing")
        pos = model_based_positions(keys, model, capacity)
        return cls.from_positions(keys, payloads, pos, capacity)

    # ------------------------------------------------------------------
    # search

    def exponential_search(self, start: int, key: float) -> tuple[int, int]:
        """Lower bound of ``key`` from ``start``; returns (slot, iterations).

        Rightward probes sit at offsets 0, 1, 3, 7, ... and leftward probes at
        1, 2, 4, ...; each probe that fails to bracket the target counts one
        iteration, so a target d slots away costs ceil(log2(d + 1)).
        """
        keys = self.keys
        cap = self.capacity
        if keys[start] < key:
            it = 1
            lo = start + 1
            while True:
                probe = start + (1 << it) - 1
                if probe >= cap:
                    hi = cap
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
        return bisect_left(keys, key, lo, hi), it

    def search_last_le(self, start: int, key: float) -> tuple[int, int]:
        """Last slot holding a key <= ``key`` (-1 if none), with iterations.

        Mirror image of ``exponential_search``. For a stored key this lands on
        its occupied slot even when gap copies of it sit to the left.
        """
        keys = self.keys
        cap = self.capacity
        if keys[start] <= key:
            it = 0
            lo = start
            off = 1
            while True:
                probe = start + off
                if probe >= cap:
                    hi = cap
                    break
                if keys[probe] <= key:
                    it += 1
                    lo = probe
                    off <<= 1
                else:
                    hi = probe
                    break
        else:
            it = 1
            hi = start
            while True:
                probe = start - (1 << it) + 1
                if probe < 0:
                    lo = 0
                    break
                if keys[probe] > key:
                    it += 1
                    hi = probe
                else:
                    lo = probe
                    break
        return bisect_right(keys, key, lo, hi) - 1, it

    def find(self, start: int, key: float) -> tuple[int, int]:
        """Occupied slot of ``key`` or -1, plus search iterations."""
        pos, it = self.search_last_le(start, key)
        if pos >= 0 and self.keys[pos] == key:
            return pos, it
        return -1, it

    def next_occupied(self, pos: int) -> int:
        """First occupied slot >= pos, or capacity."""
        nxt = self.bitmap.find(1, pos)
        return self.capacity if nxt < 0 else nxt

    def insert_position(self, predicted: int, key: float) -> tuple[int, int, bool]:
        """Where ``key`` should go given a model prediction.

        Returns (slot, iterations, exists). The slot is the predicted slot
        pulled into the run of gaps that keeps sort order; if there is no such
        gap it is the lower bound, which ``insert_at`` opens up by shifting.
        """
        lb, it = self.exponential_search(predicted, key)
        cap = self.capacity
        if lb < cap:
            if self.keys[lb] == key:
                return lb, it, True
            if not self.bitmap[lb] and predicted > lb:
                end = self.next_occupied(lb) - 1
                return (predicted if predicted < end else end), it, False
        return lb, it, False

    # ------------------------------------------------------------------
    # mutation

    def insert_at(self, pos: int, key: float, payload=None) -> int:
        """Store ``key`` at ``pos`` (or just before the element there),
        shifting toward the closest gap. Returns the number of elements moved.

        ``pos == capacity`` means "after every stored key".
        """
        cap = self.capacity
        if self.num_keys >= cap:
            raise OverflowError("gapped array is full")
        keys = self.keys
        payloads = self.payloads
        bitmap = self.bitmap
        if pos < cap and not bitmap[pos]:
            shifts = 0
            first = pos
        else:
            right = bitmap.find(0, pos) if pos < cap else -1
            left = bitmap.rfind(0, 0, pos)
            if right >= 0 and (left < 0 or right - pos <= pos - left):
                shifts = right - pos
                keys[pos + 1:right + 1] = keys[pos:right]
                payloads[pos + 1:right + 1] = payloads[pos:right]
                bitmap[right] = 1
                first = pos
            else:
                shifts = pos - left - 1
                pos -= 1
                keys[left:pos] = keys[left + 1:pos + 1]
                payloads[left:pos] = payloads[left + 1:pos + 1]
                bitmap[left] = 1
                first = left
        keys[pos] = key
        payloads[pos] = payload
        bitmap[pos] = 1
        self.num_keys += 1
        # gaps just left of the lowest newly occupied slot now precede keys[first]
        start = bitmap.rfind(1, 0, first) + 1
        if start < first:
            keys[start:first] = [keys[first]] * (first - start)
        return shifts

    def erase_at(self, pos: int) -> None:
        if not (0 <= pos < self.capacity) or not self.bitmap[pos]:
            raise ValueError(f"slot {pos} is not occupied")
        self.bitmap[pos] = 0
        self.payloads[pos] = None
        self.num_keys -= 1
        fill = self.keys[pos + 1] if pos + 1 < self.capacity else SENTINEL
        start = self.bitmap.rfind(1, 0, pos) + 1
        self.keys[start:pos + 1] = [fill] * (pos + 1 - start)

    # ------------------------------------------------------------------
    # iteration and inspection

    def scan(self, start: int = 0, end_key: float | None = None, count: int | None = None):
        """Yield (key, payload) for occupied slots from ``start`` in order,
        stopping before ``end_key`` or after ``count`` items."""
        bitmap = self.bitmap
        keys = self.keys
        payloads = self.payloads
        pos = bitmap.find(1, start)
        left = count
        while pos >= 0:
            if left is not None:
                if left <= 0:
                    return
                left -= 1
            k = keys[pos]
            if end_key is not None and k >= end_key:
                return
            yield k, payloads[pos]
            pos = bitmap.find(1, pos + 1)

    def occupied_mask(self) -> np.ndarray:
        return np.frombuffer(bytes(self.bitmap), dtype=np.uint8).astype(bool)

    def occupied_positions(self) -> np.ndarray:
        return np.flatnonzero(self.occupied_mask())

    def occupied_keys(self) -> np.ndarray:
        return np.asarray(self.keys, dtype=np.float64)[self.occupied_mask()]

    def occupied_payloads(self) -> list:
        payloads = self.payloads
        return [payloads[i] for i in self.occupied_positions().tolist()]

    def min_key(self) -> float:
        pos = self.bitmap.find(1)
        return self.keys[pos] if pos >= 0 else SENTINEL

    def max_key(self) -> float:
        pos = self.bitmap.rfind(1)
        return self.keys[pos] if pos >= 0 else -SENTINEL

    def audit(self) -> list[str]:
        """Check the bitmap, ordering and gap-fill invariants."""
        problems = []
        if len(self.keys) != self.capacity or len(self.bitmap) != self.capacity \
                or len(self.payloads) != self.capacity:
            return [f"slot arrays do not match capacity {self.capacity}"]
        if sum(self.bitmap) != self.num_keys:
            problems.append(f"bitmap popcount {sum(self.bitmap)} != num_keys {self.num_keys}")
        expect = SENTINEL
        prev = None
        for i in range(self.capacity - 1, -1, -1):
            k = self.keys[i]
            if self.bitmap[i]:
                if prev is not None and not k < prev:
                    problems.append(f"slot {i}: key {k} not below next key {prev}")
                prev = k
                expect = k
            elif k != expect:
                problems.append(f"gap slot {i} holds {k}, expected {expect}")
            if len(problems) > 20:
                break
        return problems
