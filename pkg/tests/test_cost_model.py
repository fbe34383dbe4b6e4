import itertools
import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from alex.cost_model import (CostWeights, ExpectedStats, NodeStats, composite_index_cost, deviation_detected,
                             expected_stats, expected_stats_sampled, gap_distances, intra_node_cost,
                             sampled_stats_with_work, traverse_cost)
from alex.gapped_array import GappedArray
from alex.linear_model import LinearModel, fit_ranks


def test_default_weights():
    w = CostWeights()
    assert (w.w_s, w.w_i, w.w_d, w.w_b) == (10.0, 1.0, 10.0, 1e-6)
    with pytest.raises(ValueError):
        CostWeights(w_s=-1)


def test_node_stats_averages():
    st_ = NodeStats(cum_search_iterations=30, num_lookups=8, cum_shifts=12, num_inserts=2)
    assert st_.search_iters == 3.0
    assert st_.shifts == 6.0
    assert st_.insert_fraction == 0.2
    empty = NodeStats()
    assert (empty.search_iters, empty.shifts, empty.insert_fraction) == (0.0, 0.0, 0.0)


def test_intra_node_cost_examples():
    assert intra_node_cost(ExpectedStats(2, 4, 0.5)) == 22.0
    assert intra_node_cost(ExpectedStats(2, 400, 0.0)) == 20.0
    w = CostWeights().scaled(2)
    assert intra_node_cost(ExpectedStats(2, 4, 0.5), w) == 44.0


def test_traverse_cost_examples():
    assert traverse_cost(0, 0) == 0.0
    assert traverse_cost(2, 1 << 20) == pytest.approx(21.048576)
    assert traverse_cost(3, 10) > traverse_cost(2, 10)
    assert traverse_cost(2, 11) > traverse_cost(2, 10)


@pytest.mark.parametrize("expected,empirical,want", [
    (10, 15, False), (10, 15.01, True), (0, 0, False), (0, 10, False), (0, 10.5, True), (10, 5, False),
])
def test_deviation_examples(expected, empirical, want):
    assert deviation_detected(expected, empirical) is want


def test_composite_cost_examples():
    assert composite_index_cost([7.5], [100]) == 7.5
    assert composite_index_cost([10, 20], [5, 5]) == 15.0
    assert composite_index_cost([10, 20], [1, 3]) == 17.5
    assert composite_index_cost([], []) == 0.0


def test_expected_stats_direct_hits():
    keys = np.arange(100, dtype=float) * 3
    # c = 2 >= 1/(a*min delta) = 1 since a*delta = 1 slot per key
    st_ = expected_stats(keys, fit_ranks(keys).scale(2), 200)
    assert st_.expected_search_iters == 0.0
    assert st_.expected_shifts == 1.0


def test_expected_shifts_dense_layout():
    for n in range(1, 33):
        keys = np.arange(n, dtype=float)
        st_ = expected_stats(keys, fit_ranks(keys), n)
        # every slot is full: distance to the gap past either end
        want = np.mean([min(i + 1, n - i) for i in range(n)])
        assert st_.expected_shifts == pytest.approx(want, abs=1e-12)


def test_gap_distances_runs():
    assert gap_distances(np.array([0, 1, 2, 5, 7, 8]), 10).tolist() == [1, 2, 1, 1, 1, 1]
    assert gap_distances(np.array([], dtype=np.int64), 4).tolist() == []


def measured(keys, model, cap):
    arr = GappedArray.build_model_based(keys, None, model, cap)
    iters, shifts = [], []
    for k in keys.tolist():
        pos, it = arr.find(model.predict(k, cap), k)
        assert pos >= 0
        iters.append(it)
    occ = arr.occupied_positions().tolist()
    occupied = set(occ)
    for p in occ:
        r = next((g for g in range(p, cap + 1) if g not in occupied), cap)
        l = next((g for g in range(p, -2, -1) if g not in occupied), -1)
        shifts.append(min(p - l, r - p))
    return np.mean(iters), np.mean(shifts)


def test_expected_stats_match_materialized_nodes():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(1, 300))
        keys = np.unique(np.floor(rng.lognormal(0, 1.5, n) * 1000))
        cap = int(math.ceil(keys.size / rng.uniform(0.5, 1.0)))
        model = fit_ranks(keys).scale(cap / keys.size)
        st_ = expected_stats(keys, model, cap)
        s, i = measured(keys, model, cap)
        assert st_.expected_search_iters == pytest.approx(s, abs=1e-9)
        assert st_.expected_shifts == pytest.approx(i, abs=1e-9)


def test_expected_stats_empty():
    st_ = expected_stats(np.zeros(0), LinearModel(1, 0), 4)
    assert (st_.expected_search_iters, st_.expected_shifts) == (0.0, 0.0)


def test_sampled_small_input_exact():
    rng = np.random.default_rng(1)
    keys = np.sort(rng.random(200))
    m = fit_ranks(keys).scale(300 / 200)
    assert expected_stats_sampled(keys, m, 300) == expected_stats(keys, m, 300)


def test_sampled_uniform_shifts_close_to_exact():
    rng = np.random.default_rng(2)
    keys = np.unique(rng.random(1_000_000))
    cap = int(keys.size / 0.7)
    m = fit_ranks(keys).scale(cap / keys.size)
    approx, work = sampled_stats_with_work(keys, m, cap)
    exact = expected_stats(keys, m, cap)
    assert approx.expected_shifts == pytest.approx(exact.expected_shifts, rel=0.3)
    assert work < keys.size


def test_sampled_work_bounded_by_constant_times_exact():
    rng = np.random.default_rng(3)
    for dist in ("uniform", "lognormal", "clustered"):
        n = 200_000
        if dist == "uniform":
            keys = rng.random(n)
        elif dist == "lognormal":
            keys = rng.lognormal(0, 2, n)
        else:
            keys = np.concatenate([rng.random(n // 2) * 1e-6, 1 + rng.random(n // 2)])
        keys = np.unique(keys)
        cap = int(keys.size / 0.7)
        _, work = sampled_stats_with_work(keys, fit_ranks(keys).scale(cap / keys.size), cap)
        assert work <= 3 * keys.size


@seed(41)
@settings(max_examples=50, deadline=None)
@given(st.floats(0, 20), st.floats(0, 200), st.floats(0, 1), st.floats(0.1, 10))
def test_intra_cost_linear(s, i, f, k):
    w = CostWeights()
    a = intra_node_cost(ExpectedStats(s, i, f), w)
    assert intra_node_cost(ExpectedStats(s, i, f), w.scaled(k)) == pytest.approx(k * a)
    assert intra_node_cost(ExpectedStats(2 * s, 2 * i, f), w) == pytest.approx(2 * a)


def test_lookup_replay_matches_expected():
    """Replaying every stored key once as a lookup reproduces the expected search cost."""
    from alex.index import AlexIndex

    rng = np.random.default_rng(8)
    keys = np.unique(np.floor(rng.lognormal(0, 2, 5000) * 1e9))
    idx = AlexIndex().bulk_load(keys)
    for k in keys.tolist():
        idx.get(k)
    for node in idx.data_nodes():
        if node.num_keys == 0:
            continue
        exact = expected_stats(node.array.occupied_keys(), node.model, node.capacity)
        assert node.stats.search_iters == pytest.approx(exact.expected_search_iters, abs=1e-12)


def test_all_pairs_small_grid_shift_formula():
    # brute force over all placements of up to 5 keys in 6 slots
    for n in range(1, 6):
        for pos in itertools.combinations(range(6), n):
            got = gap_distances(np.array(pos), 6).tolist()
            occ = set(pos)
            want = []
            for p in pos:
                r = next(g for g in range(p, 7) if g not in occ)
                l = next(g for g in range(p, -2, -1) if g not in occ)
                want.append(min(p - l, r - p))
            assert got == want
