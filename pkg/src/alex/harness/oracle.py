"""Random mixed operations checked against a sorted-map oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import islice

import numpy as np
from sortedcontainers import SortedDict

from ..index import DuplicateKeyError
from .datasets import load_dataset

# insert, lookup, delete, update, range
DEFAULT_MIX = (0.4, 0.3, 0.1, 0.1, 0.1)
_OPS = ("insert", "lookup", "delete", "update", "range")


@dataclass
class OracleResult:
    ops: int = 0
    counts: dict = field(default_factory=dict)
    mismatches: list = field(default_factory=list)
    audit_problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.audit_problems


def oracle_check(index, dataset: str = "lognormal", init_keys: int = 10_000, ops: int = 100_000,
                 seed=0, mix=DEFAULT_MIX, max_scan_len: int = 100, audit: bool = True,
                 max_reports: int = 20) -> OracleResult:
    """Drive ``index`` and a SortedDict with the same random operations.

    Half of the point operations target a stored key and half a key that is
    absent (an unused dataset key or a value between stored keys), so both
    branches of every operation are exercised. Inserts of stored keys must
    raise DuplicateKeyError.
    """
    rng = np.random.default_rng(seed)
    n_ins = int(ops * mix[0]) + 16
    keys = load_dataset(dataset, init_keys + 2 * n_ins, seed)
    order = rng.permutation(keys.size)
    init = np.sort(keys[order[:init_keys]])
    fresh = keys[order[init_keys:]].tolist()
    index.bulk_load(init, [("v", k) for k in init.tolist()])
    ref = SortedDict({k: ("v", k) for k in init.tolist()})
    res = OracleResult(counts={o: 0 for o in _OPS})
    kinds = rng.choice(len(_OPS), ops, p=np.asarray(mix) / np.sum(mix)).tolist()
    coins = rng.random(ops).tolist()
    picks = rng.random(ops).tolist()
    lens = rng.integers(0, max_scan_len + 1, ops).tolist()
    lo_key, hi_key = float(keys[0]), float(keys[-1])

    def bad(i, what):
        if len(res.mismatches) < max_reports:
            res.mismatches.append(f"op {i}: {what}")
        else:
            res.mismatches.append("...")

    def some_key(i, present: bool):
        n = len(ref)
        if present and n:
            return ref.keys()[int(picks[i] * n)]
        if fresh and picks[i] < 0.5:
            return fresh[int(picks[i] * 2 * len(fresh)) % len(fresh)]
        return lo_key + (hi_key - lo_key) * picks[i]

    fresh_i = 0
    for i, kind in enumerate(kinds):
        op = _OPS[kind]
        res.counts[op] += 1
        if op == "insert":
            if coins[i] < 0.9 and fresh_i < len(fresh):
                k = fresh[fresh_i]
                fresh_i += 1
            else:
                k = some_key(i, True)
            try:
                index.insert(k, ("v", k))
                if k in ref:
                    bad(i, f"duplicate insert of {k} accepted")
                ref[k] = ("v", k)
            except DuplicateKeyError:
                if k not in ref:
                    bad(i, f"insert of new key {k} rejected as duplicate")
        elif op == "lookup":
            k = some_key(i, coins[i] < 0.5)
            got, want = index.get(k), ref.get(k)
            if got != want:
                bad(i, f"get({k}) = {got!r}, expected {want!r}")
        elif op == "delete":
            k = some_key(i, coins[i] < 0.7)
            got, want = index.delete(k), k in ref
            if got != want:
                bad(i, f"delete({k}) = {got}, expected {want}")
            ref.pop(k, None)
        elif op == "update":
            k = some_key(i, coins[i] < 0.7)
            got, want = index.update(k, ("u", i)), k in ref
            if got != want:
                bad(i, f"update({k}) = {got}, expected {want}")
            if want:
                ref[k] = ("u", i)
        else:
            k = some_key(i, coins[i] < 0.5)
            m = lens[i]
            if coins[i] < 0.25:
                # bounded by an end key as well as a count
                end = some_key((i + 1) % ops, True)
                got = index.range_query(k, end, m)
                want = [(a, ref[a]) for a in islice(ref.irange(k, end, inclusive=(True, False)), m)]
            else:
                got = index.range_query(k, count=m)
                want = [(a, ref[a]) for a in islice(ref.irange(k), m)]
            if got != want:
                bad(i, f"range_query({k}, count={m}) returned {len(got)} pairs, expected {len(want)}")
        res.ops += 1
        if len(res.mismatches) > max_reports:
            break
    if len(index) != len(ref):
        res.mismatches.append(f"size {len(index)} != oracle size {len(ref)}")
    elif list(index.items()) != list(ref.items()):
        res.mismatches.append("final contents differ from the oracle")
    if audit:
        res.audit_problems = list(index.audit())
    return res
