import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from apmldpc.gf2 import Gf2Matrix, pack_bits
from apmldpc.lowweight import all_weights, combination, greedy_descent, low_weight_vectors


def bases(max_rows=12, max_cols=70):
    shape = st.tuples(st.integers(1, max_rows), st.integers(1, max_cols))
    return shape.flatmap(lambda s: arrays(np.uint8, s, elements=st.integers(0, 1)))


@given(bases())
@settings(max_examples=50)
def test_all_weights_brute(a):
    words = pack_bits(a)
    got = all_weights(words)
    for mask in range(1 << a.shape[0]):
        coeff = np.array([(mask >> b) & 1 for b in range(a.shape[0])])
        assert got[mask] == (coeff @ a.astype(int) % 2).sum()
        assert np.bitwise_count(combination(words, mask)).sum() == got[mask]


@given(bases(10, 40))
@settings(max_examples=50)
def test_exhaustive_minimum(a):
    m = Gf2Matrix.from_dense(a)
    vecs, exhaustive = low_weight_vectors(m, limit=1)
    assert exhaustive
    nonzero = [w for w in all_weights(m.words)[1:] if w > 0]
    if nonzero:
        assert np.bitwise_count(vecs[0]).sum() == min(nonzero)
    else:
        assert vecs == []


def test_accept_filter_and_order():
    a = np.array([[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 1, 0], [1, 1, 1, 1, 1, 1]], dtype=np.uint8)
    m = Gf2Matrix.from_dense(a)
    vecs, _ = low_weight_vectors(m, limit=10)
    ws = [int(np.bitwise_count(v).sum()) for v in vecs]
    assert ws == sorted(ws) and ws[0] == 1
    vecs, _ = low_weight_vectors(m, accept=lambda v: int(np.bitwise_count(v).sum()) >= 3, limit=1)
    assert int(np.bitwise_count(vecs[0]).sum()) == 3


def test_greedy_fallback_flags_inexact():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, (12, 50), dtype=np.uint8)
    vecs, exhaustive = low_weight_vectors(Gf2Matrix.from_dense(a), limit=3, exhaustive_cap=16)
    assert not exhaustive and 0 < len(vecs) <= 3
    pool = greedy_descent(pack_bits(a))
    assert len(pool) == 12


def test_combination_empty_mask():
    words = pack_bits(np.eye(3, dtype=np.uint8))
    assert not combination(words, 0).any()
    assert list(itertools.chain(combination(words, 5))) == list(words[0] ^ words[2])
