import numpy as np
import pytest

from alex.harness.zipf import ZipfGenerator, zeta, zipf_pick


def test_zeta_examples():
    assert zeta(1, 0.5) == 1.0
    assert zeta(3, 0.0) == 3.0
    assert zeta(2, 1.0 - 1e-12) == pytest.approx(1.5)


def test_theta_zero_is_uniform():
    n = 100
    draws = ZipfGenerator(n, 0.0, seed=1).ranks(1_000_000)
    counts = np.bincount(draws, minlength=n)
    expected = 1_000_000 / n
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 99.9th percentile of chi-squared with 99 degrees of freedom
    assert chi2 < 148.2


def test_rank_zero_most_frequent():
    counts = np.bincount(ZipfGenerator(1000, 0.99, seed=2).ranks(200_000), minlength=1000)
    assert counts.argmax() == 0


@pytest.mark.parametrize("theta", [0.5, 0.8, 0.99])
def test_first_two_ranks_ratio(theta):
    counts = np.bincount(ZipfGenerator(10_000, theta, seed=3).ranks(1_000_000))
    assert counts[0] / counts[1] == pytest.approx(2 ** theta, rel=0.1)


def test_range_and_validation():
    g = ZipfGenerator(7, 0.9, seed=4)
    r = g.ranks(10_000)
    assert r.min() >= 0 and r.max() < 7
    assert 0 <= zipf_pick(7, 0.9, np.random.default_rng(0)) < 7
    assert ZipfGenerator(1, 0.99, seed=0).ranks(10).tolist() == [0] * 10
    with pytest.raises(ValueError):
        ZipfGenerator(0)
    with pytest.raises(ValueError):
        ZipfGenerator(10, 1.0)


def test_seeded_reproducible():
    assert ZipfGenerator(500, 0.99, seed=9).ranks(100).tolist() == ZipfGenerator(500, 0.99, seed=9).ranks(100).tolist()
