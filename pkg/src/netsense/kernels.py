"""Group-by kernels over integer key columns.

Keys are dense vertex ids (``0..V-1``) or encoded (src, dst) pairs
(``0..V*V-1``). Each kernel picks a dense strategy (array indexed by key,
via ``np.bincount``) when the key space is small relative to the row
count, and falls back to a sort-based strategy (``np.unique``) for
hypersparse key spaces where a dense array would be mostly empty.

With ``workers > 1`` the dense strategy splits rows into contiguous
chunks, reduces each chunk on a thread and merges the partial arrays with
exact integer sums. The sort-based strategy runs as one chunk: merging
sorted partials costs about as much as sorting once. Results never depend
on the worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# dense strategy when key space <= DENSE_FACTOR * rows + DENSE_FLOOR
DENSE_FACTOR = 4
DENSE_FLOOR = 1 << 16
# absolute cap on dense array length for pair keys (entries, not bytes)
DENSE_PAIR_CAP = 1 << 25
# float64 bincount sums are exact below this bound
_EXACT_FLOAT = 1 << 53
# below this many rows a single chunk is used regardless of workers
MIN_CHUNK_ROWS = 1 << 18


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


def use_dense(n_keys: int, n_rows: int, cap: int | None = None) -> bool:
    if cap is not None and n_keys > cap:
        return False
    return n_keys <= DENSE_FACTOR * n_rows + DENSE_FLOOR


def chunk_bounds(n_rows: int, workers: int) -> list[tuple[int, int]]:
    k = max(1, min(workers, n_rows // MIN_CHUNK_ROWS))
    edges = np.linspace(0, n_rows, k + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def map_chunks(fn, n_rows: int, workers: int):
    bounds = chunk_bounds(n_rows, workers)
    if len(bounds) == 1:
        return [fn(*bounds[0])]
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def _dense_sum(keys, n_keys, weights):
    if weights is None:
        return np.bincount(keys, minlength=n_keys).astype(np.int64, copy=False)
    if int(weights.sum()) < _EXACT_FLOAT:
        return np.bincount(keys, weights=weights, minlength=n_keys).astype(np.int64)
    out = np.zeros(n_keys, dtype=np.int64)
    np.add.at(out, keys, weights)
    return out


def _sparse_sum(keys, weights):
    if weights is None:
        uniq, counts = np.unique(keys, return_counts=True)
        return uniq, counts.astype(np.int64)
    uniq, inverse = np.unique(keys, return_inverse=True)
    return uniq, _dense_sum(inverse, len(uniq), weights)


def group_sum_sparse(keys: np.ndarray, weights: np.ndarray | None = None, workers: int = 1,
                     n_keys: int | None = None, cap: int | None = None):
    """Sum ``weights`` (or count rows) per key; returns (sorted keys, sums), sums > 0 only
    when weights are positive."""
    n = len(keys)
    if n_keys is not None and use_dense(n_keys, n, cap):
        dense = group_sum(keys, n_keys, weights, workers)
        nz = np.flatnonzero(dense)
        return nz.astype(keys.dtype, copy=False), dense[nz]

    return _sparse_sum(keys, weights)


def group_sum(keys: np.ndarray, n_keys: int, weights: np.ndarray | None = None,
              workers: int = 1) -> np.ndarray:
    """Dense per-key sums as an int64 vector of length ``n_keys``."""
    n = len(keys)
    if not use_dense(n_keys, n):
        uniq, sums = group_sum_sparse(keys, weights, workers)
        out = np.zeros(n_keys, dtype=np.int64)
        out[uniq.astype(np.int64)] = sums
        return out
    keys = keys.astype(np.intp, copy=False)

    def part(a, b):
        return _dense_sum(keys[a:b], n_keys, None if weights is None else weights[a:b])

    parts = map_chunks(part, n, workers)
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


def distinct(keys: np.ndarray, n_keys: int | None = None, workers: int = 1,
             cap: int | None = None) -> np.ndarray:
    """Sorted distinct keys."""
    n = len(keys)
    if n_keys is not None and use_dense(n_keys, n, cap):
        keys_i = keys.astype(np.intp, copy=False)

        def mark(a, b):
            seen = np.zeros(n_keys, dtype=bool)
            seen[keys_i[a:b]] = True
            return seen

        parts = map_chunks(mark, n, workers)
        seen = parts[0]
        for p in parts[1:]:
            seen |= p
        return np.flatnonzero(seen).astype(keys.dtype, copy=False)

    return np.unique(keys)


def max_or_zero(values: np.ndarray) -> int:
    return int(values.max()) if len(values) else 0
