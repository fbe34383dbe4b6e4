"""Synthetic key sets and the binary dataset file format.

File layout: an 8-byte little-endian count, then that many little-endian
64-bit values. The caller says whether the values are integers or doubles.
"""

from __future__ import annotations

import struct

import numpy as np

DATASETS = ("lognormal", "uniform64", "file")
_UNIFORM_STEP = 2048    # 2**64 / 2**53: every value is exact as a double


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _unique_draws(count: int, draw) -> np.ndarray:
    keys = np.unique(draw(count))
    while keys.size < count:
        keys = np.unique(np.concatenate([keys, draw(count - keys.size)]))
    return keys


def gen_lognormal(count: int, seed=0) -> np.ndarray:
    """``count`` unique keys floor(1e9 * lognormal(0, 2)), ascending, as doubles.

    Draws are taken in order, duplicates dropped, and topped up until the
    count is reached; the first ``count`` distinct draws are kept.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = _rng(seed)
    draws = np.zeros(0)
    while True:
        need = count if draws.size == 0 else count // 8 + 16
        draws = np.concatenate([draws, np.floor(rng.lognormal(0.0, 2.0, need) * 1e9)])
        uniq, first = np.unique(draws, return_index=True)
        if uniq.size >= count:
            return np.sort(draws[np.sort(first)[:count]])


def gen_uniform64(count: int, seed=0) -> np.ndarray:
    """``count`` unique keys spread over [0, 2**64), ascending, as uint64.

    Keys are multiples of 2048 so they convert to doubles without rounding.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = _rng(seed)
    draws = _unique_draws(count, lambda m: rng.integers(0, 1 << 53, m, dtype=np.int64))
    return draws.astype(np.uint64) * np.uint64(_UNIFORM_STEP)


def write_dataset(path, keys, integer: bool) -> None:
    arr = np.asarray(keys, dtype="<u8" if integer else "<f8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", arr.size))
        f.write(arr.tobytes())


def read_dataset(path, integer: bool) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(8)
        if len(head) != 8:
            raise ValueError("dataset file has no count header")
        (n,) = struct.unpack("<Q", head)
        body = f.read()
    if len(body) != 8 * n:
        raise ValueError(f"header says {n} values, file holds {len(body) // 8}")
    keys = np.frombuffer(body, dtype="<u8" if integer else "<f8")
    if n > 1 and not np.all(keys[1:] > keys[:-1]):
        raise ValueError("dataset keys must be sorted and unique")
    return keys.astype(np.uint64 if integer else np.float64)


def load_dataset(name: str, count: int, seed=0, path=None, integer: bool = False) -> np.ndarray:
    """Ascending unique keys as doubles, whatever the source."""
    if name == "lognormal":
        return gen_lognormal(count, seed)
    if name == "uniform64":
        return gen_uniform64(count, seed).astype(np.float64)
    if name == "file":
        if path is None:
            raise ValueError("file dataset needs a path")
        keys = read_dataset(path, integer)
        if keys.size < count:
            raise ValueError(f"file holds {keys.size} keys, {count} requested")
        keys = keys[np.sort(_rng(seed).choice(keys.size, count, replace=False))] if keys.size > count else keys
        out = keys.astype(np.float64)
        if integer and count > 1 and not np.all(out[1:] > out[:-1]):
            raise ValueError("integer keys collide when converted to doubles")
        return out
    raise ValueError(f"unknown dataset {name!r}")
