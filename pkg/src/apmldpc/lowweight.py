"""Low-weight vectors in a small GF(2) subspace.

The subspace is given by basis rows in packed form.  Small spaces are swept
completely; larger ones fall back to greedy weight descent over basis pairs.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .gf2 import Gf2Matrix

EXHAUSTIVE_CAP = 1 << 20
_TABLE_BITS = 10


def _span_table(words: np.ndarray) -> np.ndarray:
    """All 2^k combinations of ``k`` packed rows; entry ``i`` uses the bits of ``i``."""
    k, w = words.shape
    table = np.zeros((1 << k, w), dtype=np.uint64)
    for b in range(k):
        half = 1 << b
        table[half:2 * half] = table[:half] ^ words[b]
    return table


def all_weights(words: np.ndarray) -> np.ndarray:
    """Weight of every combination of the rows, indexed by the combination bitmask."""
    d = words.shape[0]
    lo = min(d, _TABLE_BITS)
    table = _span_table(words[:lo])
    if d == lo:
        return np.bitwise_count(table).sum(axis=1, dtype=np.int64)
    high = _span_table(words[lo:])
    out = np.empty(1 << d, dtype=np.int64)
    step = 1 << lo
    for h in range(high.shape[0]):
        out[h * step:(h + 1) * step] = np.bitwise_count(table ^ high[h]).sum(axis=1, dtype=np.int64)
    return out


def combination(words: np.ndarray, mask: int) -> np.ndarray:
    idx = [b for b in range(words.shape[0]) if mask >> b & 1]
    if not idx:
        return np.zeros(words.shape[1], dtype=np.uint64)
    return np.bitwise_xor.reduce(words[idx], axis=0)


def _weight(v: np.ndarray) -> int:
    return int(np.bitwise_count(v).sum())


def greedy_descent(words: np.ndarray, max_rounds: int = 64) -> list[np.ndarray]:
    """Local minima reached from each basis row by single-row XOR improvements."""
    pool = []
    d = words.shape[0]
    for i in range(d):
        v = words[i].copy()
        wv = _weight(v)
        for _ in range(max_rounds):
            cand = v[None, :] ^ words
            wc = np.bitwise_count(cand).sum(axis=1, dtype=np.int64)
            wc[np.all(cand == 0, axis=1)] = np.iinfo(np.int64).max
            j = int(np.argmin(wc))
            if wc[j] >= wv:
                break
            v, wv = cand[j], int(wc[j])
        pool.append(v)
    return pool


def low_weight_vectors(basis: Gf2Matrix | np.ndarray,
                       accept: Callable[[np.ndarray], bool] | None = None,
                       limit: int = 8,
                       exhaustive_cap: int = EXHAUSTIVE_CAP,
                       max_tests: int = 4096) -> tuple[list[np.ndarray], bool]:
    """Lightest nonzero vectors in the span of ``basis`` passing ``accept``.

    Returns packed vectors in nondecreasing weight order and a flag telling
    whether the sweep was exhaustive.  At most ``max_tests`` calls to
    ``accept`` are made.
    """
    words = basis.words if isinstance(basis, Gf2Matrix) else np.asarray(basis, dtype=np.uint64)
    d = words.shape[0]
    if d == 0:
        return [], True
    out: list[np.ndarray] = []
    tests = 0
    if (1 << d) <= exhaustive_cap:
        weights = all_weights(words)
        live = np.flatnonzero(weights > 0)  # dependent rows can sum to zero
        order = live[np.argsort(weights[live], kind="stable")]
        for mask in order:
            v = combination(words, int(mask))
            tests += 1
            if accept is None or accept(v):
                out.append(v)
                if len(out) >= limit:
                    break
            if tests >= max_tests:
                break
        return out, True
    pool = greedy_descent(words)
    seen = set()
    ranked = sorted(((_weight(v), i) for i, v in enumerate(pool)))
    for _, i in ranked:
        v = pool[i]
        key = v.tobytes()
        if key in seen or not v.any():
            continue
        seen.add(key)
        tests += 1
        if accept is None or accept(v):
            out.append(v)
            if len(out) >= limit:
                break
        if tests >= max_tests:
            break
    return out, False
