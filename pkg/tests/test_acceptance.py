"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) to print all twelve lines
without pytest, or through pytest where the lines go to the terminal too.
"""

import gc
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from alex.btree import BPlusTree  # noqa: E402
from alex.gapped_array import GappedArray  # noqa: E402
from alex.harness.datasets import gen_lognormal, gen_uniform64  # noqa: E402
from alex.harness.microbench import search_microbenchmark  # noqa: E402
from alex.harness.oracle import oracle_check  # noqa: E402
from alex.harness.workload import WorkloadSpec, run_workload  # noqa: E402
from alex.harness.zipf import ZipfGenerator  # noqa: E402
from alex.index import AlexIndex  # noqa: E402
from alex.linear_model import LinearModel, fit_ranks, progressive_fit_trace  # noqa: E402
from theorem_oracle import exhaustive_violations, theorem_two_failures  # noqa: E402


def c1_oracle_equivalence():
    t0 = time.perf_counter()
    failed = []
    for i, dataset in enumerate(["lognormal"] * 5 + ["uniform64"] * 5):
        for make in (AlexIndex, BPlusTree):
            res = oracle_check(make(), dataset, ops=100_000, seed=100 + i)
            if not res.ok or res.ops != 100_000:
                failed.append((dataset, make.__name__, res.mismatches[:2], res.audit_problems[:2]))
    secs = time.perf_counter() - t0
    return not failed and secs < 60, f"20 runs of 1e5 ops, {len(failed)} failed, {secs:.1f}s (limit 60s)"


def c2_direct_hit_theorem():
    total, bad = theorem_two_failures(trials=100, seed=2)
    return not bad, f"100 key sets, {total} keys, {len(bad)} sets with a non-hit"


def c3_direct_hit_bounds():
    checked, bad = exhaustive_violations(grid=16, max_size=8, factors=(1, 1.25, 2))
    return not bad, f"{checked} (set, c) cases, {len(bad)} outside the bounds"


def c4_prediction_error_contrast():
    t0 = time.perf_counter()
    idx = AlexIndex().bulk_load(gen_lognormal(1_000_000, seed=4))
    gapped = float((idx.prediction_errors() == 0).mean())
    dense = float((idx.prediction_errors(dense=True) == 0).mean())
    secs = time.perf_counter() - t0
    ok = gapped > dense and gapped >= 0.40 and secs < 30
    return ok, f"exact hits gapped {gapped:.4f} vs dense {dense:.4f} (need > dense and >= 0.40), {secs:.1f}s"


def c5_insert_shifts():
    t0 = time.perf_counter()
    n = 100_000
    cap = int(n / 0.8)
    arr = GappedArray(cap)
    model = LinearModel(cap, 0)
    total = 0
    for k in np.random.default_rng(5).random(n).tolist():
        pos, _, _ = arr.insert_position(model.predict(k, cap), k)
        total += arr.insert_at(pos, k)
    secs = time.perf_counter() - t0
    mean, bound = total / n, 4 * math.log2(n)
    return mean < bound and secs < 10, f"mean shifts {mean:.2f} < {bound:.2f} at density 0.8, {secs:.1f}s"


def c6_search_shape():
    t0 = time.perf_counter()
    rows = search_microbenchmark(num_keys=1_000_000, bound=1 << 16, seed=6)
    secs = time.perf_counter() - t0
    exp = sorted((r.error, r.mean_ns, r.iterations) for r in rows if r.method == "exponential")
    binary = [r.mean_ns for r in rows if r.method == "binary"]
    iters_ok = all(it == math.ceil(math.log2(d + 1)) for d, _, it in exp)
    lat = [ns for _, ns, _ in exp]
    monotone = all(a <= b for a, b in zip(lat, lat[1:]))
    mid = float(np.mean(binary))
    flat = all(abs(b - mid) <= 0.2 * mid for b in binary)
    ok = iters_ok and monotone and flat and secs < 30
    return ok, (f"iterations exact {iters_ok}, exponential latency monotone {monotone}, "
                f"binary {min(binary):.0f}-{max(binary):.0f} ns within 20% of {mid:.0f} {flat}, {secs:.1f}s")


def c7_structure():
    rep = AlexIndex().bulk_load(gen_uniform64(1_000_000, seed=7)).report(check=False)
    caps = sorted(set(rep.data_node_capacities))
    ok = rep.max_depth <= 2 and len(caps) == 1 and rep.num_internal_nodes <= 4
    return ok, (f"max depth {rep.max_depth}, {rep.num_data_nodes} data nodes with capacities {caps}, "
                f"{rep.num_internal_nodes} internal nodes")


def c8_action_mix():
    idx = AlexIndex()
    spec = WorkloadSpec(dataset="lognormal", init_key_count=100_000, total_key_count=1_100_000,
                        mix="write_only", ops=1_000_000, seed=8, verify=False)
    rep = run_workload("alex", spec, index=idx)
    events = idx.fullness_events
    frac = idx.action_counts["expand_scale"] / events if events else 0.0
    return frac >= 0.80 and rep.inserts == 1_000_000, \
        f"expand+scale {idx.action_counts['expand_scale']} of {events} fullness events = {frac:.3f} (need >= 0.80)"


_BIG = {}


def _lookup_rate(idx, probes, repeats: int = 3) -> float:
    get = idx.get
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for k in probes:
            get(k)
        best = min(best, time.perf_counter() - t0)
    return len(probes) / best


def _big_runs():
    """Zipfian read-only lookups on 1e7 uniform keys; B+tree page size swept."""
    if _BIG:
        return _BIG
    keys = gen_uniform64(10_000_000, seed=9).astype(np.float64)
    ranks = ZipfGenerator(keys.size, 0.99, np.random.default_rng(9)).ranks(200_000)
    probes = keys[ranks].tolist()
    payloads = keys.tolist()
    sweep = {}
    for page in (256, 1024, 4096, 16384):
        bt = BPlusTree(page_bytes=page).bulk_load(keys, payloads)
        assert all(bt.get(k) == k for k in probes[:10_000])
        sweep[page] = (_lookup_rate(bt, probes), bt.index_bytes)
        del bt
        gc.collect()
    alex = AlexIndex().bulk_load(keys, payloads)
    assert all(alex.get(k) == k for k in probes[:10_000])
    _BIG.update(sweep=sweep, alex_rate=_lookup_rate(alex, probes), alex_bytes=alex.index_bytes)
    del alex
    gc.collect()
    return _BIG


def c9_index_size():
    r = _big_runs()
    page = max(r["sweep"], key=lambda p: r["sweep"][p][0])
    bt_bytes = r["sweep"][page][1]
    return r["alex_bytes"] * 10 <= bt_bytes, \
        f"ALEX index {r['alex_bytes']} B vs B+tree inner {bt_bytes} B at best page {page} B (need ratio >= 10)"


def c10_throughput():
    r = _big_runs()
    page = max(r["sweep"], key=lambda p: r["sweep"][p][0])
    bt_rate = r["sweep"][page][0]
    ratio = r["alex_rate"] / bt_rate
    return ratio >= 1.0, f"ALEX {r['alex_rate']:.0f} ops/s vs B+tree {bt_rate:.0f} ops/s at page {page} B, ratio {ratio:.3f}"


def c11_distribution_shift():
    keys = gen_lognormal(1_000_000, seed=11)
    idx = AlexIndex().bulk_load(keys[:500_000], keys[:500_000].tolist())
    for k in keys[500_000:].tolist():
        idx.insert(k, k)
    stored = list(idx.items())
    same = len(stored) == keys.size and all(a == b == c for (a, b), c in zip(stored, keys.tolist()))
    same = same and all(idx.get(k) == k for k in keys[::97].tolist()) and idx.audit() == []
    mean = idx.insert_shifts / 500_000
    bound = 4 * math.log2(max(n.num_keys for n in idx.data_nodes()))
    forced = idx.action_counts["forced_split"]
    return same and mean <= bound, \
        f"contents match {same}, mean shifts {mean:.3f} <= {bound:.2f}, forced splits {forced}"


def c12_progressive_fit():
    keys = gen_lognormal(1_000_000, seed=12)
    tr = progressive_fit_trace(keys)
    full = fit_ranks(keys)
    ds = abs(tr.model.slope / full.slope - 1)
    di = abs(tr.model.intercept / full.intercept - 1)
    frac = tr.touched / keys.size
    return ds <= 0.02 and di <= 0.02 and frac <= 0.5, \
        f"slope err {ds:.2e}, intercept err {di:.2e}, touched {frac:.1%} of keys in {tr.rounds} rounds (need <= 50%)"


CRITERIA = [c1_oracle_equivalence, c2_direct_hit_theorem, c3_direct_hit_bounds, c4_prediction_error_contrast,
            c5_insert_shifts, c6_search_shape, c7_structure, c8_action_mix, c9_index_size, c10_throughput,
            c11_distribution_shift, c12_progressive_fit]


def run(n: int) -> tuple[bool, str]:
    ok, detail = CRITERIA[n - 1]()
    return ok, f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {detail}"


@pytest.mark.parametrize("n", range(1, 13))
def test_criterion(n, capsys):
    ok, line = run(n)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run(n) for n in range(1, 13)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
