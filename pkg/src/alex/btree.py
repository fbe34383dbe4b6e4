"""Baseline in-memory B+tree with a configurable page size.

Inner pages route with ``bisect_right`` over separators: child i holds keys
below ``keys[i]`` and at or above ``keys[i-1]``. Leaves are chained for
range scans.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right

import numpy as np

from .index import DuplicateKeyError
from .sizing import KEY_BYTES, POINTER_BYTES


class _Leaf:
    __slots__ = ("keys", "vals", "next", "prev")

    def __init__(self, keys, vals):
        self.keys = keys
        self.vals = vals
        self.next = None
        self.prev = None


class _Inner:
    __slots__ = ("keys", "children")

    def __init__(self, keys, children):
        self.keys = keys
        self.children = children


class BPlusTree:
    def __init__(self, page_bytes: int = 1024, payload_bytes: int = 8):
        if page_bytes < 4 * (KEY_BYTES + max(payload_bytes, POINTER_BYTES)):
            raise ValueError("page too small for four entries")
        self.page_bytes = page_bytes
        self.payload_bytes = payload_bytes
        self.leaf_cap = page_bytes // (KEY_BYTES + payload_bytes)
        self.inner_cap = page_bytes // (KEY_BYTES + POINTER_BYTES)
        self.leaf_min = math.ceil(self.leaf_cap / 2)
        self.inner_min = math.ceil(self.inner_cap / 2)
        self._clear()

    def _clear(self):
        self.root = _Leaf([], [])
        self.head = self.root
        self.num_keys = 0
        self.inner_pages = 0
        self.leaf_pages = 1

    def __len__(self) -> int:
        return self.num_keys

    # ------------------------------------------------------------------
    # bulk load

    def bulk_load(self, keys, payloads=None) -> "BPlusTree":
        """Replace the contents with sorted, unique ``keys``; pages packed full."""
        keys = np.asarray(keys, dtype=np.float64)
        n = keys.size
        if n > 1 and not np.all(keys[1:] > keys[:-1]):
            raise ValueError("keys must be strictly increasing")
        self._clear()
        if n == 0:
            return self
        klist = keys.tolist()
        vlist = [None] * n if payloads is None else list(payloads)
        if len(vlist) != n:
            raise ValueError("keys and payloads differ in length")
        bounds = _pack(n, self.leaf_cap, self.leaf_min)
        leaves = [_Leaf(klist[a:b], vlist[a:b]) for a, b in zip(bounds, bounds[1:])]
        for a, b in zip(leaves, leaves[1:]):
            a.next = b
            b.prev = a
        level = leaves
        lows = [lf.keys[0] for lf in leaves]
        self.leaf_pages = len(leaves)
        while len(level) > 1:
            bounds = _pack(len(level), self.inner_cap, self.inner_min)
            up = []
            up_lows = []
            for a, b in zip(bounds, bounds[1:]):
                up.append(_Inner(lows[a + 1:b], level[a:b]))
                up_lows.append(lows[a])
            self.inner_pages += len(up)
            level, lows = up, up_lows
        self.root = level[0]
        self.head = leaves[0]
        self.num_keys = n
        return self

    # ------------------------------------------------------------------
    # point operations

    def _leaf(self, key):
        node = self.root
        while node.__class__ is _Inner:
            node = node.children[bisect_right(node.keys, key)]
        return node

    def get(self, key, default=None):
        node = self.root
        while node.__class__ is _Inner:
            node = node.children[bisect_right(node.keys, key)]
        keys = node.keys
        i = bisect_left(keys, key)
        if i < len(keys) and keys[i] == key:
            return node.vals[i]
        return default

    lookup = get

    def __contains__(self, key) -> bool:
        leaf = self._leaf(key)
        i = bisect_left(leaf.keys, key)
        return i < len(leaf.keys) and leaf.keys[i] == key

    def update(self, key, payload) -> bool:
        leaf = self._leaf(key)
        i = bisect_left(leaf.keys, key)
        if i < len(leaf.keys) and leaf.keys[i] == key:
            leaf.vals[i] = payload
            return True
        return False

    def insert(self, key, payload=None) -> None:
        key = float(key)
        path = []
        node = self.root
        while node.__class__ is _Inner:
            i = bisect_right(node.keys, key)
            path.append((node, i))
            node = node.children[i]
        j = bisect_left(node.keys, key)
        if j < len(node.keys) and node.keys[j] == key:
            raise DuplicateKeyError(key)
        node.keys.insert(j, key)
        node.vals.insert(j, payload)
        self.num_keys += 1
        if len(node.keys) <= self.leaf_cap:
            return
        mid = len(node.keys) // 2
        right = _Leaf(node.keys[mid:], node.vals[mid:])
        del node.keys[mid:]
        del node.vals[mid:]
        right.next = node.next
        right.prev = node
        if node.next is not None:
            node.next.prev = right
        node.next = right
        self.leaf_pages += 1
        sep, new = right.keys[0], right
        while path:
            parent, i = path.pop()
            parent.keys.insert(i, sep)
            parent.children.insert(i + 1, new)
            if len(parent.children) <= self.inner_cap:
                return
            mid = len(parent.children) // 2
            sep = parent.keys[mid - 1]
            new = _Inner(parent.keys[mid:], parent.children[mid:])
            del parent.keys[mid - 1:]
            del parent.children[mid:]
            self.inner_pages += 1
        self.root = _Inner([sep], [self.root, new])
        self.inner_pages += 1

    def delete(self, key) -> bool:
        path = []
        node = self.root
        while node.__class__ is _Inner:
            i = bisect_right(node.keys, key)
            path.append((node, i))
            node = node.children[i]
        j = bisect_left(node.keys, key)
        if j >= len(node.keys) or node.keys[j] != key:
            return False
        del node.keys[j]
        del node.vals[j]
        self.num_keys -= 1
        if not path or len(node.keys) >= self.leaf_min:
            return True
        parent, i = path.pop()
        self._fix_leaf(node, parent, i)
        node = parent
        while path and len(node.children) < self.inner_min:
            parent, i = path.pop()
            self._fix_inner(node, parent, i)
            node = parent
        if self.root.__class__ is _Inner and len(self.root.children) == 1:
            self.root = self.root.children[0]
            self.inner_pages -= 1
        return True

    def _fix_leaf(self, leaf: _Leaf, parent: _Inner, i: int):
        left = parent.children[i - 1] if i > 0 else None
        right = parent.children[i + 1] if i + 1 < len(parent.children) else None
        if left is not None and len(left.keys) > self.leaf_min:
            leaf.keys.insert(0, left.keys.pop())
            leaf.vals.insert(0, left.vals.pop())
            parent.keys[i - 1] = leaf.keys[0]
        elif right is not None and len(right.keys) > self.leaf_min:
            leaf.keys.append(right.keys.pop(0))
            leaf.vals.append(right.vals.pop(0))
            parent.keys[i] = right.keys[0]
        elif left is not None:
            left.keys += leaf.keys
            left.vals += leaf.vals
            self._unlink(leaf)
            del parent.keys[i - 1]
            del parent.children[i]
        else:
            leaf.keys += right.keys
            leaf.vals += right.vals
            self._unlink(right)
            del parent.keys[i]
            del parent.children[i + 1]

    def _unlink(self, leaf: _Leaf):
        if leaf.prev is not None:
            leaf.prev.next = leaf.next
        else:
            self.head = leaf.next
        if leaf.next is not None:
            leaf.next.prev = leaf.prev
        self.leaf_pages -= 1

    def _fix_inner(self, node: _Inner, parent: _Inner, i: int):
        left = parent.children[i - 1] if i > 0 else None
        right = parent.children[i + 1] if i + 1 < len(parent.children) else None
        if left is not None and len(left.children) > self.inner_min:
            node.children.insert(0, left.children.pop())
            node.keys.insert(0, parent.keys[i - 1])
            parent.keys[i - 1] = left.keys.pop()
        elif right is not None and len(right.children) > self.inner_min:
            node.children.append(right.children.pop(0))
            node.keys.append(parent.keys[i])
            parent.keys[i] = right.keys.pop(0)
        elif left is not None:
            left.keys += [parent.keys[i - 1]] + node.keys
            left.children += node.children
            del parent.keys[i - 1]
            del parent.children[i]
            self.inner_pages -= 1
        else:
            node.keys += [parent.keys[i]] + right.keys
            node.children += right.children
            del parent.keys[i]
            del parent.children[i + 1]
            self.inner_pages -= 1

    # ------------------------------------------------------------------
    # scans

    def range_query(self, start_key, end_key=None, count: int | None = None) -> list:
        """Pairs with ``start_key <= key < end_key``, at most ``count`` of them."""
        out = []
        if count is not None and count <= 0:
            return out
        leaf = self._leaf(start_key)
        j = bisect_left(leaf.keys, start_key)
        while leaf is not None:
            keys = leaf.keys
            stop = len(keys) if end_key is None else bisect_left(keys, end_key, j)
            if count is not None:
                stop = min(stop, j + count - len(out))
            out.extend(zip(keys[j:stop], leaf.vals[j:stop]))
            if stop < len(keys) or (count is not None and len(out) >= count):
                break
            leaf = leaf.next
            j = 0
        return out

    def items(self):
        leaf = self.head
        while leaf is not None:
            yield from zip(leaf.keys, leaf.vals)
            leaf = leaf.next

    # ------------------------------------------------------------------
    # sizes and checks

    @property
    def height(self) -> int:
        h = 1
        node = self.root
        while node.__class__ is _Inner:
            node = node.children[0]
            h += 1
        return h

    @property
    def index_bytes(self) -> int:
        """Inner pages only."""
        return self.inner_pages * self.page_bytes

    @property
    def data_bytes(self) -> int:
        return self.leaf_pages * self.page_bytes

    def audit(self) -> list[str]:
        problems = []
        leaves = []
        inner = 0
        depths = set()

        def walk(node, lo, hi, depth, is_root):
            nonlocal inner
            if node.__class__ is _Inner:
                inner += 1
                c = len(node.children)
                if len(node.keys) != c - 1:
                    problems.append("inner page with mismatched separators")
                if c > self.inner_cap or (not is_root and c < self.inner_min) or (is_root and c < 2):
                    problems.append(f"inner page with {c} children")
                if any(a >= b for a, b in zip(node.keys, node.keys[1:])):
                    problems.append("inner separators out of order")
                bounds = [lo] + node.keys + [hi]
                for k, child in enumerate(node.children):
                    walk(child, bounds[k], bounds[k + 1], depth + 1, False)
            else:
                depths.add(depth)
                leaves.append(node)
                n = len(node.keys)
                if n > self.leaf_cap or (not is_root and n < self.leaf_min):
                    problems.append(f"leaf with {n} keys")
                if n != len(node.vals):
                    problems.append("leaf keys and payloads differ in length")
                for k in node.keys:
                    if (lo is not None and k < lo) or (hi is not None and k >= hi):
                        problems.append(f"key {k} outside separator bounds")
                        break

        walk(self.root, None, None, 0, True)
        if len(depths) > 1:
            problems.append("leaves at different depths")
        chain = []
        leaf = self.head
        while leaf is not None:
            chain.append(leaf)
            leaf = leaf.next
        if len(chain) != len(leaves) or any(a is not b for a, b in zip(chain, leaves)):
            problems.append("leaf chain does not match tree order")
        keys = [k for lf in leaves for k in lf.keys]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            problems.append("keys not strictly increasing")
        if len(keys) != self.num_keys:
            problems.append(f"num_keys {self.num_keys} != {len(keys)}")
        if inner != self.inner_pages or len(leaves) != self.leaf_pages:
            problems.append("page counters disagree with a recount")
        return problems


def _pack(n: int, cap: int, low: int) -> list[int]:
    """Boundaries cutting n entries into full pages; the last two pages are
    evened out if the last would fall below ``low``."""
    bounds = list(range(0, n, cap)) + [n]
    if len(bounds) > 2 and bounds[-1] - bounds[-2] < low:
        total = bounds[-1] - bounds[-3]
        bounds[-2] = bounds[-3] + (total + 1) // 2
    return bounds
