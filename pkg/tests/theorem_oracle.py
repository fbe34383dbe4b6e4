"""Direct-hit counting for model-based placement and its closed-form bounds.

The bounds hold for an array with room on both sides of every prediction, so
the model is shifted right by a margin and the capacity leaves slack past the
last prediction. Neither end then clamps a prediction or packs the tail.
"""

import math
from fractions import Fraction
from itertools import combinations

import numpy as np

from alex.gapped_array import model_based_positions
from alex.linear_model import LinearModel, fit_ranks, predict_many


def unclamped(keys: np.ndarray, c: float) -> tuple[LinearModel, int]:
    n = keys.size
    m = fit_ranks(keys).scale(c)
    m = LinearModel(m.slope, m.intercept + 2 * n + 4)
    cap = int(math.floor(m.slope * keys[-1] + m.intercept)) + n + 2
    return m, cap


def direct_hits(keys: np.ndarray, model: LinearModel, cap: int) -> int:
    pos = model_based_positions(keys, model, cap)
    return int((pos == predict_many(model, keys, cap)).sum())


def hit_bounds(keys: np.ndarray, model: LinearModel) -> tuple[int, int]:
    """(lower, upper) on direct hits; gaps compared in exact arithmetic."""
    y = [Fraction(model.slope) * Fraction(float(k)) + Fraction(model.intercept) for k in keys]
    n = len(y)
    upper = 2 + sum(1 for i in range(n - 2) if y[i + 2] - y[i] > 1)
    l = 0
    while l < n - 1 and y[l + 1] - y[l] >= 1:
        l += 1
    return l + 1, upper


def exhaustive_violations(grid: int = 16, max_size: int = 8, factors=(1, 1.25, 2)) -> tuple[int, list]:
    checked, bad = 0, []
    for size in range(1, max_size + 1):
        for combo in combinations(range(grid), size):
            keys = np.array(combo, dtype=float)
            for c in factors:
                m, cap = unclamped(keys, c)
                h = direct_hits(keys, m, cap)
                lo, hi = hit_bounds(keys, m)
                checked += 1
                if not lo <= h <= hi:
                    bad.append((combo, c, h, lo, hi))
    return checked, bad


def theorem_two_failures(trials: int = 100, seed: int = 0) -> tuple[int, list]:
    """Random key sets at c = 1/(a·min gap): every key must be a direct hit."""
    rng = np.random.default_rng(seed)
    bad = []
    total = 0
    for t in range(trials):
        n = int(rng.integers(2, 2000))
        keys = np.unique(np.floor(rng.lognormal(0, 1.5, n) * 1e6))
        if keys.size < 2:
            keys = np.array([0.0, 1.0])
        base = fit_ranks(keys)
        c = 1.0 / (base.slope * float(np.diff(keys).min()))
        c *= float(rng.choice([1.0, 1.0 + rng.random()]))
        m, cap = unclamped(keys, c)
        h = direct_hits(keys, m, cap)
        total += keys.size
        if h != keys.size:
            bad.append((t, keys.size, h))
    return total, bad
