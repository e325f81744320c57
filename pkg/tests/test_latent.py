import numpy as np
import pytest

from apmldpc.gf2 import Gf2Vector, kernel_matrix, mat_mul, syndrome_dense
from apmldpc.latent import (divisors, latent_candidates, latent_lift, mixed_product,
                            mixed_product_direct, search_latent)

from conftest import TOY_SPECS, random_orthogonal_specs


@pytest.mark.parametrize("side", "XZ")
def test_block_formula_matches_product_on_toys(toy_codes, side):
    for code in list(toy_codes.values()) + random_orthogonal_specs(12):
        assert mixed_product(code, side) == mixed_product_direct(code, side)


@pytest.mark.parametrize("side", "XZ")
def test_block_formula_matches_product_c1(c1, side):
    assert mixed_product(c1, side) == mixed_product_direct(c1, side)


@pytest.mark.parametrize("side", "XZ")
def test_kernel_lifts_are_logical_candidates(toy_codes, side):
    for code in toy_codes.values():
        K = kernel_matrix(mixed_product(code, side))
        for i in range(K.rows):
            x = latent_lift(code, side, K.row(i))
            assert not syndrome_dense(code.check(side), x).any()


def test_latent_lift_inputs_agree(toy_codes):
    code = toy_codes["T1"]
    lam = [0, 3, 5]
    dense = np.zeros(code.latent("X").rows, dtype=np.uint8)
    dense[lam] = 1
    a = latent_lift(code, "X", lam)
    assert a == latent_lift(code, "X", dense) == latent_lift(code, "X", Gf2Vector.from_dense(dense))
    with pytest.raises(ValueError):
        latent_lift(code, "X", [code.latent("X").rows])
    with pytest.raises(ValueError):
        latent_lift(code, "X", np.zeros(3, dtype=np.uint8))


def test_divisors():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert divisors(1) == [1]


def brute_latent_logical_min(code, side):
    K = kernel_matrix(mixed_product(code, side))
    img = mat_mul(K, code.latent(side))
    prof = code.active(side).profile()
    best = None
    for mask in range(1, 1 << K.rows):
        v = Gf2Vector(code.n, np.bitwise_xor.reduce(img.words[[b for b in range(K.rows) if mask >> b & 1]], axis=0))
        if v.is_zero() or prof.reduce(v).is_zero():
            continue
        best = v.weight if best is None else min(best, v.weight)
    return best


@pytest.mark.parametrize("name", sorted(TOY_SPECS))
def test_search_latent_reaches_brute_minimum(toy_codes, name):
    code = toy_codes[name]
    for side in "XZ":
        expect = brute_latent_logical_min(code, side)
        got = search_latent(code, side)
        if expect is None:
            assert got == []
        else:
            assert got and got[0][0].weight == expect
            assert all(c.accepted for _, c in got)


def test_candidates_are_unique(toy_codes):
    cands = latent_candidates(toy_codes["T3"], "X")
    vecs = [c.vector for c in cands]
    assert len(vecs) == len(set(vecs))


def test_c1_latent_weight(c1):
    for side in "XZ":
        found = search_latent(c1, side)
        assert found[0][0].weight == 24
        assert found[0][1].accepted
