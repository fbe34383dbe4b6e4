"""Linear position models: ``slot = floor(slope * key + intercept)``.

Data nodes use one of these to turn a key into a slot index. Fitting is
ordinary least squares; ``fit_progressive`` fits on a systematic sample that
doubles until the parameters stop moving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INITIAL_SAMPLE = 64
CONVERGENCE_TOL = 0.01


@dataclass(frozen=True)
class LinearModel:
    slope: float = 0.0
    intercept: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ValueError(f"non-finite model parameters ({self.slope}, {self.intercept})")

    def predict(self, key: float, capacity: int) -> int:
        return predict(self, key, capacity)

    def scale(self, factor: float) -> "LinearModel":
        return scale(self, factor)


def predict(model: LinearModel, key: float, capacity: int) -> int:
    """Clamp ``floor(slope*key + intercept)`` into ``[0, capacity)``."""
    p = model.slope * key + model.intercept
    if p < 0:
        return 0
    if p >= capacity:
        return capacity - 1
    return int(p)


def predict_many(model: LinearModel, keys: np.ndarray, capacity: int) -> np.ndarray:
    """Vectorised ``predict``; returns int64 slots."""
    p = np.floor(model.slope * np.asarray(keys, dtype=np.float64) + model.intercept)
    np.clip(p, 0, capacity - 1, out=p)
    return p.astype(np.int64)


def scale(model: LinearModel, factor: float) -> LinearModel:
    if not factor > 0:
        raise ValueError("scale factor must be positive")
    return LinearModel(model.slope * factor, model.intercept * factor)


def fit(keys, targets) -> LinearModel:
    """Least-squares line through ``(keys[i], targets[i])``."""
    x = np.asarray(keys, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot fit a model to zero keys")
    if x.shape != y.shape:
        raise ValueError("keys and targets differ in length")
    if x.size == 1:
        return LinearModel(0.0, float(y[0]))
    mx = x.mean()
    my = y.mean()
    dx = x - mx
    sxx = float(dx @ dx)
    if sxx == 0.0 or not math.isfinite(sxx):
        return LinearModel(0.0, float(y[0]))
    slope = float(dx @ (y - my)) / sxx
    return LinearModel(slope, float(my - slope * mx))


def fit_ranks(keys) -> LinearModel:
    """Fit keys against their ranks ``0..n-1``."""
    x = np.asarray(keys, dtype=np.float64)
    return fit(x, np.arange(x.size, dtype=np.float64))


@dataclass(frozen=True)
class ProgressiveFit:
    model: LinearModel
    rounds: int     # regressions evaluated
    touched: int    # distinct keys folded into the running sums


def progressive_fit_trace(keys, initial_sample: int = INITIAL_SAMPLE,
                          tol: float = CONVERGENCE_TOL) -> ProgressiveFit:
    """AMC: fit ranks on a systematic sample whose size doubles each round.

    The sample at stride ``s`` is every ``s``-th key. Halving the stride adds
    exactly the odd multiples of the new stride, so running sums carry over and
    each key is read at most once. Stops when slope and intercept both move by
    less than ``tol`` (relative) between rounds.
    """
    x = np.asarray(keys, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("cannot fit a model to zero keys")
    first = min(initial_sample, n)
    if n <= first:
        return ProgressiveFit(fit_ranks(x), 1, n)

    # largest power-of-two stride that still yields >= `first` samples
    stride = 1 << max(0, (n // first).bit_length() - 1)
    while stride > 1 and (n - 1) // stride + 1 < first:
        stride >>= 1
    ref = x[0]
    sums = np.zeros(5)  # count, sum dx, sum y, sum dx*dx, sum dx*y

    def absorb(idx):
        dx = x[idx] - ref
        y = idx.astype(np.float64)
        sums[0] += idx.size
        sums[1] += dx.sum()
        sums[2] += y.sum()
        sums[3] += dx @ dx
        sums[4] += dx @ y

    def solve():
        c, sx, sy, sxx, sxy = sums
        den = c * sxx - sx * sx
        if den <= 0 or not math.isfinite(den):
            return LinearModel(0.0, 0.0)
        slope = float((c * sxy - sx * sy) / den)
        return LinearModel(slope, float((sy - slope * sx) / c - slope * ref))

    absorb(np.arange(0, n, stride))
    model = solve()
    rounds = 1
    while stride > 1:
        stride >>= 1
        absorb(np.arange(stride, n, 2 * stride))
        new = solve()
        rounds += 1
        if _close(new.slope, model.slope, tol) and _close(new.intercept, model.intercept, tol):
            return ProgressiveFit(new, rounds, int(sums[0]))
        model = new
    return ProgressiveFit(model, rounds, n)


def _close(new: float, old: float, tol: float) -> bool:
    if old == 0.0:
        return new == 0.0
    return abs(new - old) < tol * abs(old)


def fit_progressive(keys, initial_sample: int = INITIAL_SAMPLE) -> LinearModel:
    return progressive_fit_trace(keys, initial_sample).model
