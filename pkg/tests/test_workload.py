import numpy as np
import pytest

from alex import AlexIndex
from alex.gapped_array import GappedArray
from alex.harness.workload import (MIXES, WorkloadSpec, error_bucket, error_histogram, latency_percentiles,
                                   op_cycle, run_workload, workload_keys)
from alex.linear_model import fit_ranks


def test_op_cycle_interleaving():
    assert op_cycle(MIXES["read_heavy"]) == ["read"] * 19 + ["insert"]
    assert op_cycle(MIXES["write_heavy"]) == ["read", "insert"]
    assert op_cycle(MIXES["short_range"]) == ["scan"] * 19 + ["insert"]
    assert op_cycle(MIXES["write_only"]) == ["insert"]


def test_spec_validation():
    with pytest.raises(ValueError):
        WorkloadSpec(mix="custom", custom=(50, 40, 5))
    with pytest.raises(ValueError):
        WorkloadSpec(init_key_count=10, total_key_count=5)
    with pytest.raises(ValueError):
        WorkloadSpec(mix="nope")
    with pytest.raises(ValueError):
        WorkloadSpec(ops=None, seconds=None)
    assert WorkloadSpec(mix="custom", custom=(50, 40, 10)).percentages() == (50, 40, 10)


def test_error_buckets():
    assert [error_bucket(e) for e in (0, 1, 2, 3, 4, 7, 8)] == [0, 1, 2, 2, 3, 3, 4]


def test_latency_percentiles():
    p = latency_percentiles(range(1, 1001))
    assert p["max"] == 1000.0 and p["p50"] == pytest.approx(500.5)
    assert latency_percentiles([]) == {}


def test_shift_modes():
    spec = WorkloadSpec(init_key_count=100, total_key_count=300, shift="smallest_first_ascending")
    init, rest = workload_keys(spec)
    assert init.max() < min(rest) and rest == sorted(rest)
    spec = WorkloadSpec(init_key_count=100, total_key_count=300, shift="smallest_first_random")
    init, rest = workload_keys(spec)
    assert init.max() < min(rest) and rest != sorted(rest)
    init, rest = workload_keys(WorkloadSpec(init_key_count=100, total_key_count=300))
    assert init.max() > min(rest)


@pytest.mark.parametrize("kind", ["alex", "btree"])
@pytest.mark.parametrize("mix", sorted(MIXES))
def test_every_mix_is_oracle_consistent(kind, mix):
    spec = WorkloadSpec(init_key_count=5000, total_key_count=10_000, mix=mix, ops=4000, seed=3)
    rep = run_workload(kind, spec)
    assert rep.ok, (rep.mismatches, rep.audit_problems[:3])
    assert rep.ops == 4000
    assert rep.num_keys == 5000 + rep.inserts
    assert set(rep.latency_ns) == {"p50", "p99", "p99.9", "max"}


def test_zero_op_budget_reports_sizes():
    rep = run_workload("alex", WorkloadSpec(init_key_count=1000, total_key_count=1000, ops=0))
    assert rep.ops == 0 and rep.ops_per_second == 0.0 and rep.latency_ns == {}
    assert rep.index_bytes > 0 and rep.data_bytes > 0


def test_exhaustion_is_reported_not_fatal():
    rep = run_workload("btree", WorkloadSpec(init_key_count=1000, total_key_count=1100, mix="write_only", ops=500))
    assert rep.exhausted and rep.inserts == 100 and rep.ok


def test_histogram_sums_to_probes():
    keys = np.unique(np.random.default_rng(1).lognormal(0, 2, 20_000))
    idx = AlexIndex().bulk_load(keys)
    h = error_histogram(idx)
    assert sum(h.values()) == keys.size
    probe = keys[::7]
    assert sum(error_histogram(idx, probe).values()) == probe.size


def test_direct_hit_condition_gives_all_bucket_zero():
    keys = np.arange(0, 5000, 3.0)
    idx = AlexIndex().bulk_load(keys)
    assert error_histogram(idx) == {0: keys.size}


def test_gapped_beats_dense_on_exact_hits():
    keys = np.unique(np.random.default_rng(2).random(5000))
    cap = int(keys.size / 0.7)
    m = fit_ranks(keys).scale(cap / keys.size)
    gapped = GappedArray.build_model_based(keys, None, m, cap)
    gap_hits = sum(m.predict(k, cap) == p for k, p in zip(keys.tolist(), gapped.occupied_positions().tolist()))
    dense_model = m.scale(keys.size / cap)
    dense_hits = sum(dense_model.predict(k, keys.size) == i for i, k in enumerate(keys.tolist()))
    assert gap_hits > dense_hits
    # a small node size limit forces a real tree on this small key set
    idx = AlexIndex(max_node_bytes=1 << 16).bulk_load(np.unique(np.floor(np.random.default_rng(2).lognormal(0, 2, 50_000) * 1e9)))
    assert np.sum(idx.prediction_errors() == 0) > np.sum(idx.prediction_errors(dense=True) == 0)
