"""Exact slot arithmetic for internal nodes.

Every internal node routes with ``slot = (floor((key - origin) * scale) + offset) >> shift``
where ``origin`` is shared by the whole tree, ``scale`` only ever changes by
powers of two and ``offset``/``shift`` are integers. Doubling a node, halving
it, carving a child frame out of a slot run, or coarsening into a new root are
then integer operations, so no key ever changes its destination because of
floating-point rounding.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class Frame(NamedTuple):
    scale: float
    offset: int
    shift: int

    def raw_slot(self, u: float) -> int:
        return (math.floor(u * self.scale) + self.offset) >> self.shift

    def refine(self, slots_log2: int) -> "Frame":
        """Frame that splits this frame's slot 0 into 2**slots_log2 slots."""
        return run_frame(self, 0, 1, slots_log2)

    def doubled(self) -> "Frame":
        if self.shift > 0:
            return Frame(self.scale, self.offset, self.shift - 1)
        return Frame(self.scale * 2.0, self.offset * 2, 0)

    def coarsened(self, num_slots: int, place: int) -> "Frame":
        """Frame whose slot ``place`` covers slots [0, num_slots) of this one."""
        k = num_slots.bit_length() - 1
        return Frame(self.scale, self.offset + place * (num_slots << self.shift), self.shift + k)

    def fine_range(self, start: int, length: int) -> tuple[int, int]:
        """Half-open range of ``floor(u*scale)`` covered by slots [start, start+length)."""
        return (start << self.shift) - self.offset, ((start + length) << self.shift) - self.offset

    def key_bounds(self, origin: float, start: int, length: int) -> tuple[float, float]:
        lo, hi = self.fine_range(start, length)
        return origin + lo / self.scale, origin + hi / self.scale


def run_frame(frame: Frame, start: int, length: int, slots_log2: int) -> Frame:
    """Frame with 2**slots_log2 slots covering ``frame``'s slots [start, start+length).

    ``length`` must be a power of two and ``start`` a multiple of it.
    """
    q = (length.bit_length() - 1) + frame.shift
    base = frame.offset - (start << frame.shift)
    if q >= slots_log2:
        return Frame(frame.scale, base, q - slots_log2)
    k = slots_log2 - q
    return Frame(frame.scale * float(1 << k), base << k, 0)


_SAFE = float(1 << 62)


def raw_slots(frame: Frame, u: np.ndarray) -> np.ndarray:
    """Vectorised ``Frame.raw_slot`` (same float operations, then integers)."""
    f = np.floor(u * frame.scale)
    if f.size and (np.abs(f).max() < _SAFE and abs(frame.offset) < (1 << 62)):
        t = f.astype(np.int64) + np.int64(frame.offset)
        return np.right_shift(t, frame.shift)
    return np.array([(int(x) + frame.offset) >> frame.shift for x in f.tolist()], dtype=object)


def clamped_slots(frame: Frame, u: np.ndarray, num_slots: int) -> np.ndarray:
    s = raw_slots(frame, u)
    if s.dtype == object:
        s = np.array([min(max(int(x), 0), num_slots - 1) for x in s], dtype=np.int64)
    return np.clip(s, 0, num_slots - 1)
