import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apmldpc.apm import AffineMap, perm_matrix_dense
from apmldpc.gf2 import Gf2Matrix, Gf2Vector, mat_mul, syndrome_dense
from apmldpc.restricted import (BlockStructure, CrtSplit, FiberPattern, compress, compressed_checks,
                                coprime_splits, crt_expand, crt_parametrize, fiber_checks, fiber_lift,
                                fiber_patterns, is_block_constant, isd_trial, kernel_search, lift,
                                make_supports, search_blk, search_crt, search_dir, search_fib)

from conftest import brute_min_logical


def lift_rows(a: np.ndarray, P: int, m: int) -> np.ndarray:
    """iota applied to each row of a 2-D array."""
    Q = P // m
    r = a.reshape(a.shape[0], -1, 1, Q)
    return np.tile(r, (1, 1, m, 1)).reshape(a.shape[0], -1)


def test_structures_validate():
    with pytest.raises(ValueError):
        BlockStructure(10, 3)
    with pytest.raises(ValueError):
        FiberPattern(4, ())
    with pytest.raises(ValueError):
        FiberPattern(4, (4,))
    assert FiberPattern(4, (2, 0, 2)).S == (0, 2)
    assert not FiberPattern(3, (0, 1, 2)).proper
    with pytest.raises(ValueError):
        CrtSplit(4, 6)


@given(st.integers(1, 4), st.sampled_from([(12, 2), (12, 3), (12, 4), (12, 6), (8, 8)]), st.data())
def test_compress_lift_inverse(blocks, Pm, data):
    P, m = Pm
    Q = P // m
    bits = data.draw(st.lists(st.integers(0, 1), min_size=blocks * Q, max_size=blocks * Q))
    v = lift(np.array(bits, dtype=np.uint8), P, m)
    assert is_block_constant(v, P, m)
    assert compress(v, P, m).to_dense().tolist() == bits
    assert v.weight == m * sum(bits)


def test_compress_refuses_non_constant():
    with pytest.raises(ValueError):
        compress(np.array([1, 0, 0, 0]), 4, 2)


@given(st.integers(2, 60), st.data())
@settings(max_examples=80)
def test_descent_identity_single_map(P, data):
    # pi(M iota(u)) = M_bar u for one affine permutation and m | P
    m = data.draw(st.sampled_from([d for d in range(1, P + 1) if P % d == 0]))
    Q = P // m
    units = [a for a in range(1, P) if np.gcd(a, P) == 1] or [1]
    f = AffineMap(data.draw(st.sampled_from(units)), data.draw(st.integers(0, P - 1)), P)
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=Q, max_size=Q)), dtype=np.uint8)
    Mu = perm_matrix_dense(f).astype(int) @ lift(u, P, m).to_dense().astype(int) % 2
    expect = perm_matrix_dense(f.reduce(Q)).astype(int) @ u.astype(int) % 2
    assert np.array_equal(compress(Mu, P, m).to_dense(), expect)


@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_compression_equivalence_c1(c1, m):
    rng = np.random.default_rng(m)
    P = c1.spec.P
    Q = P // m
    hx_bar, hz_bar = compressed_checks(c1, m)
    U = rng.integers(0, 2, (200, c1.spec.L * Q), dtype=np.uint8)
    X = Gf2Matrix.from_dense(lift_rows(U, P, m))
    for h, hbar in ((c1.H_X, hx_bar), (c1.H_Z, hz_bar)):
        full = mat_mul(X, h.transpose()).to_dense()
        small = mat_mul(Gf2Matrix.from_dense(U), hbar.transpose()).to_dense()
        assert np.array_equal(full, lift_rows(small, P, m))


@pytest.mark.parametrize("S", [(0,), (1, 3), (0, 2), (0, 1, 2)])
def test_fiber_weight_law_and_checks(c1, S):
    m, P = 4, c1.spec.P
    Q = P // m
    rng = np.random.default_rng(len(S))
    fx, fz = fiber_checks(c1, m, S)
    for _ in range(50):
        y = rng.integers(0, 2, c1.spec.L * Q, dtype=np.uint8)
        v = fiber_lift(y, P, m, S)
        assert v.weight == len(S) * int(y.sum())
        assert np.array_equal(syndrome_dense(c1.H_Z, v), syndrome_dense(fz, Gf2Vector.from_dense(y)))
        assert np.array_equal(syndrome_dense(c1.H_X, v), syndrome_dense(fx, Gf2Vector.from_dense(y)))


def test_fiber_patterns_enumeration():
    assert fiber_patterns(3) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)]
    assert len(fiber_patterns(4)) == 14
    sample = fiber_patterns(8, 5, np.random.default_rng(0))
    assert len(sample) == 5 and all(len(s) < 8 for s in sample)


def test_crt_expand_definition():
    rng = np.random.default_rng(1)
    L, q1, q2 = 3, 3, 4
    y = rng.integers(0, 2, L * (q1 + q2), dtype=np.uint8)
    v = crt_expand(y, L, q1, q2).to_dense().reshape(L, 12)
    for b in range(L):
        a, be = y[b * 7:b * 7 + 3], y[b * 7 + 3:b * 7 + 7]
        for t in range(12):
            assert v[b, t] == a[t % 3] ^ be[t % 4]


def test_crt_restricted_matrix(c9):
    cmap = crt_parametrize(c9, 3, 256, "X")
    rng = np.random.default_rng(2)
    for _ in range(20):
        y = rng.integers(0, 2, cmap.inputs, dtype=np.uint8)
        assert np.array_equal(syndrome_dense(cmap.restricted, Gf2Vector.from_dense(y)),
                              syndrome_dense(c9.H_Z, cmap.expand(y)))
    images = Gf2Matrix(cmap.kernel.rows, c9.n, cmap.expand_rows(cmap.kernel))
    assert mat_mul(images, c9.H_Z.transpose()).is_zero()
    assert coprime_splits(768) == [(3, 256)]
    with pytest.raises(ValueError):
        crt_parametrize(c9, 4, 192)


def test_isd_trial_returns_kernel_words(c1):
    hd = c1.H_Z.to_dense()
    hits = isd_trial(hd, None, 2, lambda s: True, 4)
    assert hits
    for supp in hits:
        assert not syndrome_dense(c1.H_Z, Gf2Vector.from_support(c1.n, supp)).any()


def test_make_supports_shapes(c1):
    rng = np.random.default_rng(0)
    h = c1.H_Z
    assert make_supports("random", h, 40, rng).size == 40
    assert make_supports("full", h, 1, rng).size == c1.n
    nb = make_supports("neighborhood", h, 30, rng)
    assert nb.size == 30 and np.all(np.diff(nb) > 0)
    comb = make_supports("comb", h, 48, rng, block=c1.spec.P)
    assert np.all(np.diff(comb) > 0)
    with pytest.raises(ValueError):
        make_supports("nope", h, 3, rng)


@pytest.mark.parametrize("name", ["T1", "T2", "T4", "T5"])
def test_full_sweep_finds_true_minimum(toy_codes, name):
    code = toy_codes[name]
    cfg = {"dir": {"generator": "full", "sizes": [code.n]}}
    for side in "XZ":
        found = search_dir(code, side, config=cfg)
        assert found[0][0].weight == brute_min_logical(code, side)


def _summary(found):
    return [(w.weight, w.support, sorted(w.method_params.items())) for w, _ in found]


@pytest.mark.parametrize("generator", ["isd", "random"])
def test_kernel_search_worker_invariance(c1, generator):
    cfg = {"dir": {"generator": generator, "trials": 10, "sizes": [2] if generator == "isd" else [120]}}
    a = search_dir(c1, "X", config=cfg, workers=1)
    b = search_dir(c1, "X", config=cfg, workers=3)
    assert _summary(a) == _summary(b)


def test_kernel_search_seed_changes_stream(c1):
    base = {"generator": "isd", "trials": 8, "sizes": [2]}
    a = search_dir(c1, "X", config={"dir": dict(base, seed=1)})
    b = search_dir(c1, "X", config={"dir": dict(base, seed=2)})
    assert a and b and _summary(a) != _summary(b)


def test_blk_fib_crt_on_c1(c1):
    blk = search_blk(c1, "X", m=3)
    assert blk and blk[0][1].accepted and blk[0][0].method_params["m"] == 3
    w = blk[0][0]
    assert is_block_constant(w.vector(c1.n), c1.spec.P, 3)
    fib = search_fib(c1, "Z", m=2, patterns=[(0,)])
    assert fib and all(c.accepted for _, c in fib)
    with pytest.raises(ValueError):
        search_fib(c1, "Z", m=2, patterns=[(0, 1)])
    crt = search_crt(c1, "X", 8, 27)
    assert crt and crt[0][0].method_params["q1"] == 8


def test_toy_lifts_certify(toy_codes):
    code = toy_codes["T1"]
    for side in "XZ":
        for w, cert in search_blk(code, side, m=3):
            assert cert.accepted
            assert is_block_constant(w.vector(code.n), code.spec.P, 3)


def test_kernel_search_accept_filter(toy_codes):
    code = toy_codes["T2"]
    h = code.H_Z
    n = code.n

    def lift_fn(idx):
        return Gf2Vector.from_support(n, idx)

    res = kernel_search(h, lift_fn, lambda v: v.weight >= 4, sizes=[n], trials=1, generator="full",
                        seed=0, keep=3)
    assert res and all(f.weight >= 4 for f in res)
    assert [f.weight for f in res] == sorted(f.weight for f in res)
