"""Workload runner: bulk load, then an interleaved stream of operations.

Reads pick existing keys by Zipfian rank over the sorted key set, inserts
take the next key of the dataset's insertion order, and scans start at a
Zipfian-picked key and read a uniform number of keys up to a cap. A shadow
sorted set checks every answer the index gives.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from itertools import islice

import numpy as np
from sortedcontainers import SortedList

from ..btree import BPlusTree
from ..index import AlexConfig, AlexIndex
from .datasets import DATASETS, load_dataset
from .zipf import ZipfGenerator

MIXES = {
    # (read %, insert %, scan %)
    "read_only": (100, 0, 0),
    "read_heavy": (95, 5, 0),
    "write_heavy": (50, 50, 0),
    "write_only": (0, 100, 0),
    "short_range": (0, 5, 95),
}
SHIFTS = ("shuffled", "smallest_first_random", "smallest_first_ascending")


@dataclass
class WorkloadSpec:
    dataset: str = "lognormal"
    init_key_count: int = 100_000
    total_key_count: int = 200_000
    mix: str = "read_heavy"
    custom: tuple | None = None        # (read %, insert %, scan %) when mix == "custom"
    zipf_theta: float = 0.99
    max_scan_len: int = 100
    payload_bytes: int = 8
    ops: int | None = 100_000
    seconds: float | None = None
    seed: int = 0
    shift: str = "shuffled"
    path: str | None = None            # file dataset
    integer_keys: bool = False         # file dataset value type
    verify: bool = True

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.mix != "custom" and self.mix not in MIXES:
            raise ValueError(f"unknown mix {self.mix!r}")
        pct = self.percentages()
        if len(pct) != 3 or sum(pct) != 100 or min(pct) < 0:
            raise ValueError("mix percentages must be three non-negative numbers summing to 100")
        if not 1 <= self.init_key_count <= self.total_key_count:
            raise ValueError("need 1 <= init_key_count <= total_key_count")
        if self.shift not in SHIFTS:
            raise ValueError(f"unknown shift mode {self.shift!r}")
        if self.max_scan_len < 1:
            raise ValueError("max_scan_len must be positive")
        if self.ops is None and self.seconds is None:
            raise ValueError("give an op budget, a time budget, or both")

    def percentages(self) -> tuple:
        return tuple(self.custom) if self.mix == "custom" else MIXES[self.mix]


def op_cycle(percentages) -> list[str]:
    """One period of the interleaving: reads first, then scans, then inserts.

    95/5 gives 19 reads then 1 insert; 50/50 alternates.
    """
    r, i, s = (int(x) for x in percentages)
    g = math.gcd(math.gcd(r, i), s) or 1
    return ["read"] * (r // g) + ["scan"] * (s // g) + ["insert"] * (i // g)


@dataclass
class MetricsReport:
    index: str
    dataset: str
    mix: str
    shift: str
    seed: int
    init_keys: int
    ops: int = 0
    reads: int = 0
    inserts: int = 0
    scans: int = 0
    seconds: float = 0.0
    ops_per_second: float = 0.0
    index_bytes: int = 0
    data_bytes: int = 0
    num_keys: int = 0
    latency_ns: dict = field(default_factory=dict)
    error_histogram: dict = field(default_factory=dict)
    node_stats: dict = field(default_factory=dict)
    action_counts: dict = field(default_factory=dict)
    exhausted: bool = False
    mismatches: int = 0
    audit_problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mismatches == 0 and not self.audit_problems

    def as_dict(self) -> dict:
        return asdict(self)


def latency_percentiles(samples_ns) -> dict:
    a = np.asarray(samples_ns, dtype=np.float64)
    if a.size == 0:
        return {}
    p50, p99, p999 = np.percentile(a, [50, 99, 99.9])
    return {"p50": float(p50), "p99": float(p99), "p99.9": float(p999), "max": float(a.max())}


def error_bucket(err: int) -> int:
    """0 for an exact hit, else b for errors in [2**(b-1), 2**b)."""
    return int(err).bit_length()


def error_histogram(index, probe_keys=None) -> dict:
    """Bucketed |predicted slot - actual slot| over ``probe_keys`` (all keys if None)."""
    if not isinstance(index, AlexIndex):
        return {}
    if probe_keys is None:
        errs = index.prediction_errors()
    else:
        errs = []
        for k in np.asarray(probe_keys, dtype=np.float64).tolist():
            node = index._leaf(k)
            pos, _ = node.array.find(node.predict(k), k)
            if pos < 0:
                raise KeyError(k)
            errs.append(abs(node.predict(k) - pos))
        errs = np.asarray(errs, dtype=np.int64)
    buckets = np.bincount(np.frexp(errs.astype(np.float64))[1].astype(np.int64) * (errs > 0))
    return {int(b): int(c) for b, c in enumerate(buckets) if c}


def make_index(kind: str, payload_bytes: int = 8, page_bytes: int = 1024, max_node_bytes: int | None = None):
    if kind == "alex":
        cfg = AlexConfig(payload_bytes=payload_bytes) if max_node_bytes is None else \
            AlexConfig(payload_bytes=payload_bytes, max_node_bytes=max_node_bytes)
        return AlexIndex(cfg)
    if kind == "btree":
        return BPlusTree(page_bytes=page_bytes, payload_bytes=payload_bytes)
    raise ValueError(f"unknown index {kind!r}")


def workload_keys(spec: WorkloadSpec) -> tuple[np.ndarray, list]:
    """(sorted init keys, remaining keys in insertion order)."""
    keys = load_dataset(spec.dataset, spec.total_key_count, spec.seed, spec.path, spec.integer_keys)
    rng = np.random.default_rng([spec.seed, 1])
    n0 = spec.init_key_count
    if spec.shift == "shuffled":
        order = rng.permutation(keys.size)
        init = np.sort(keys[order[:n0]])
        rest = keys[order[n0:]]
    else:
        init = keys[:n0]
        rest = keys[n0:]
        if spec.shift == "smallest_first_random":
            rest = rest[rng.permutation(rest.size)]
    return init, rest.tolist()


def run_workload(index_kind: str, spec: WorkloadSpec, index=None, **index_args) -> MetricsReport:
    """Run ``spec`` against a fresh index of ``index_kind`` (or ``index``)."""
    init, pending = workload_keys(spec)
    idx = index if index is not None else make_index(index_kind, spec.payload_bytes, **index_args)
    # payload of a key is the key itself, so answers can be checked without a map
    idx.bulk_load(init, init.tolist())
    rep = MetricsReport(index_kind, spec.dataset, spec.mix, spec.shift, spec.seed, int(init.size))
    # the sorted key set maps Zipf ranks to keys; without inserts the init keys do
    tracking = spec.verify or spec.percentages()[1] > 0
    present = SortedList(init.tolist()) if tracking else None
    by_rank = present if tracking else init.tolist()
    cycle = op_cycle(spec.percentages())
    rng = np.random.default_rng([spec.seed, 2])
    zipf = ZipfGenerator(len(init), spec.zipf_theta, rng)
    scan_lens = iter(())
    ranks = iter(())
    lat = []
    budget_ops = spec.ops if spec.ops is not None else math.inf
    deadline = time.monotonic() + spec.seconds if spec.seconds is not None else math.inf
    next_insert = 0
    clock = time.perf_counter_ns
    mismatches = 0
    done = 0
    while done < budget_ops and time.monotonic() < deadline:
        for op in cycle:
            if done >= budget_ops:
                break
            if op == "insert":
                if next_insert >= len(pending):
                    rep.exhausted = True
                    break
                k = pending[next_insert]
                next_insert += 1
                t0 = clock()
                idx.insert(k, k)
                lat.append(clock() - t0)
                if tracking:
                    present.add(k)
                rep.inserts += 1
            else:
                n = len(by_rank)
                r = next(ranks, None)
                if r is None:
                    if zipf.n != n:
                        zipf = ZipfGenerator(n, spec.zipf_theta, rng)
                    ranks = iter(zipf.ranks(1024).tolist())
                    r = next(ranks)
                if r >= n:
                    r = n - 1
                k = by_rank[r]
                if op == "read":
                    t0 = clock()
                    v = idx.get(k)
                    lat.append(clock() - t0)
                    if spec.verify and v != k:
                        mismatches += 1
                    rep.reads += 1
                else:
                    m = next(scan_lens, None)
                    if m is None:
                        scan_lens = iter(rng.integers(1, spec.max_scan_len + 1, 1024).tolist())
                        m = next(scan_lens)
                    t0 = clock()
                    got = idx.range_query(k, count=m)
                    lat.append(clock() - t0)
                    if spec.verify:
                        want = list(islice(present.irange(k), m))
                        if [a for a, _ in got] != want or any(a != b for a, b in got):
                            mismatches += 1
                    rep.scans += 1
            done += 1
        if rep.exhausted or not cycle:
            break
    rep.ops = done
    rep.seconds = sum(lat) / 1e9
    rep.ops_per_second = done / rep.seconds if rep.seconds > 0 else 0.0
    rep.latency_ns = latency_percentiles(lat)
    rep.mismatches = mismatches
    finish_report(rep, idx, spec.verify, present)
    return rep


def finish_report(rep: MetricsReport, idx, verify: bool, present=None) -> None:
    rep.index_bytes = int(idx.index_bytes)
    rep.data_bytes = int(idx.data_bytes)
    rep.num_keys = len(idx)
    if isinstance(idx, AlexIndex):
        ir = idx.report(check=False)
        rep.node_stats = ir.as_dict()
        rep.node_stats.pop("action_counts")
        rep.node_stats.pop("violations")
        rep.action_counts = dict(idx.action_counts)
        rep.error_histogram = error_histogram(idx)
    else:
        rep.node_stats = {"height": idx.height, "inner_pages": idx.inner_pages,
                          "leaf_pages": idx.leaf_pages, "page_bytes": idx.page_bytes}
    if verify:
        rep.audit_problems = list(idx.audit())
        if present is not None:
            stored = [k for k, _ in idx.items()]
            if stored != list(present):
                rep.audit_problems.append("final contents differ from the shadow key set")
