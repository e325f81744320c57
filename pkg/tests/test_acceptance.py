"""Acceptance criteria 1-8, each a single test that records one PASS/FAIL line."""

import contextlib
import itertools
import json
import time

import numpy as np
import pytest

from apmldpc.apm import AffineMap, build_code, check_product_zero, delta, perm_matrix_dense, psi
from apmldpc.catalog import load_catalog
from apmldpc.cli import main
from apmldpc.ets import TannerGraph, boundary, enumerate_8cycles, ets_vectors, grow_ets
from apmldpc.exact import exact_latent, kernel_rank_test, latent_image
from apmldpc.gf2 import Gf2Matrix, Gf2Vector, mat_mul, syndrome_dense
from apmldpc.lowweight import all_weights
from apmldpc.restricted import (compress, compressed_checks, fiber_lift, fiber_patterns, lift, search_blk,
                                search_crt, search_dir, search_fib)
from apmldpc.witness import certify, load_fixtures

from conftest import CRITERIA, brute_min_logical, girth8_graph

N = 1000


@contextlib.contextmanager
def criterion(n):
    notes = []
    try:
        yield notes
    except BaseException as exc:
        CRITERIA[n] = (False, "; ".join(notes + [f"{type(exc).__name__}: {exc}".splitlines()[0]]))
        raise
    CRITERIA[n] = (True, "; ".join(notes))


@pytest.fixture(scope="module")
def catalog_codes():
    return {cid: build_code(spec, compute_girth=False) for cid, spec in load_catalog().items()}


def test_criterion_1_construction():
    with criterion(1) as notes:
        cat = load_catalog()
        t = time.perf_counter()
        c1 = build_code(cat["C1"])
        notes.append(f"C1 {time.perf_counter() - t:.1f}s")
        assert (c1.n, c1.rank_x, c1.rank_z, c1.k) == (2592, 646, 646, 1300)
        assert (c1.girth_x, c1.girth_z) == (8, 8)
        t = time.perf_counter()
        c10 = build_code(cat["C10"], compute_girth=False)
        assert c10.rank_x == 2302
        notes.append(f"C10 rank_x {c10.rank_x}")
        p3 = psi(cat["C9"], 3)
        assert p3.rank == 576 and p3.cols - p3.rank == 192
        notes.append("C9 rank(Psi_3)=576, kernel 192")
        assert time.perf_counter() - t < 120


def test_criterion_2_orthogonality(catalog_codes):
    with criterion(2) as notes:
        for cid, code in catalog_codes.items():
            spec = code.spec
            assert delta(spec.J, spec.L) == {0, 1, 2, 4, 5}
            for r in range(spec.half):
                assert psi(spec, r).is_zero() == (r != 3), (cid, r)
            assert check_product_zero(code)
        notes.append(f"{len(catalog_codes)} codes, Psi_r = 0 on {{0,1,2,4,5}}, Psi_3 != 0")


def test_criterion_3_fixtures(catalog_codes):
    expect = {
        ("C10", "X", "lat"): (48, 2303),
        ("C9", "X", "blk"): (32, None),
        ("C1", "X", "ets"): (10, 647),
        ("C1", "Z", "dec"): (10, None),
    }
    with criterion(3) as notes:
        t = time.perf_counter()
        failures = []
        for w, _ in load_fixtures():
            code = catalog_codes[w.code_id]
            cert = certify(code, w.side, w.vector(code.n))
            weight, rank = expect[(w.code_id, w.side, w.method)]
            ok = cert.accepted and w.weight == weight and (rank is None or cert.rank_aug == rank)
            notes.append(f"{w.code_id} {w.side} {w.method} w={w.weight} {'ok' if ok else 'REJECTED'}")
            if not ok:
                failures.append(f"{w.code_id} {w.side} {w.method}")
        assert time.perf_counter() - t < 120
        assert not failures, f"rejected: {failures}"


def test_criterion_4_exact_c9(catalog_codes, tmp_path):
    with criterion(4) as notes:
        c9 = catalog_codes["C9"]
        t = time.perf_counter()
        assert kernel_rank_test(c9, 4) == (True, True)
        v = exact_latent(c9, 4, sides=("X",), out_dir=tmp_path, witnesses={"X": 48})["X"]
        assert v.rank_pass and v.tau == 12 and v.witness_weight == 48
        assert v.status == "cnf-exported" and v.lower_bound is None
        assert v.statement == "latent distance >= 48 pending UNSAT attestation"
        notes.append(f"rank tests pass; dim {v.dim}; {v.statement}")
        assert time.perf_counter() - t < 120


def _lift_rows(a, P, m):
    Q = P // m
    return np.tile(a.reshape(a.shape[0], -1, 1, Q), (1, 1, m, 1)).reshape(a.shape[0], -1)


def test_criterion_5_properties(catalog_codes):
    rng = np.random.default_rng(2024)
    with criterion(5) as notes:
        # (a) compression equivalence
        for cid, code in catalog_codes.items():
            P = code.spec.P
            for m in (2, 3, 4, 6):
                if P % m:
                    continue
                hx_bar, hz_bar = compressed_checks(code, m)
                U = rng.integers(0, 2, (N, code.spec.L * (P // m)), dtype=np.uint8)
                X = Gf2Matrix.from_dense(_lift_rows(U, P, m))
                Ub = Gf2Matrix.from_dense(U)
                for h, hbar in ((code.H_X, hx_bar), (code.H_Z, hz_bar)):
                    full = mat_mul(X, h.transpose()).to_dense()
                    small = mat_mul(Ub, hbar.transpose()).to_dense()
                    assert np.array_equal(full, _lift_rows(small, P, m)), (cid, m)
        notes.append("(a) ok")
        # (b) fiber weight law, every proper pattern of C9 at m=4
        c9 = catalog_codes["C9"]
        P, m = c9.spec.P, 4
        for S in fiber_patterns(m):
            Y = rng.integers(0, 2, (N, c9.spec.L * (P // m)), dtype=np.uint8)
            for y in Y:
                assert fiber_lift(y, P, m, S).weight == len(S) * int(y.sum())
        notes.append("(b) ok")
        # (c) odd-check boundary equals the syndrome
        for cid, code in catalog_codes.items():
            h = code.H_Z
            g = TannerGraph(h)
            for _ in range(N):
                S = rng.choice(code.n, int(rng.integers(1, 40)), replace=False)
                syn = syndrome_dense(h, Gf2Vector.from_support(code.n, S))
                assert boundary(g, S.tolist()) == frozenset(np.flatnonzero(syn).tolist()), cid
        notes.append("(c) ok")
        # (d) descent identity for single affine maps
        for _ in range(N):
            P = int(rng.choice([216, 768, 12, 30]))
            m = int(rng.choice([d for d in (2, 3, 4, 6) if P % d == 0]))
            units = [a for a in range(1, P) if np.gcd(a, P) == 1]
            f = AffineMap(int(rng.choice(units)), int(rng.integers(P)), P)
            u = rng.integers(0, 2, P // m, dtype=np.uint8)
            Mu = perm_matrix_dense(f)[:, lift(u, P, m).support()].sum(axis=1) % 2
            expect = perm_matrix_dense(f.reduce(P // m))[:, np.flatnonzero(u)].sum(axis=1) % 2
            assert np.array_equal(compress(Mu, P, m).to_dense(), expect)
        notes.append("(d) ok")
        # (e) ETS vectors have zero syndrome
        for h in (girth8_graph(), catalog_codes["C1"].H_Z):
            g = TannerGraph(h)
            res = grow_ets(g, enumerate_8cycles(g, check_girth=h.cols < 100), max_stage=4, stage_cap=2000)
            count = 0
            for supp, _ in ets_vectors(res.candidates, h.cols):
                assert not syndrome_dense(h, Gf2Vector.from_support(h.cols, supp)).any()
                count += 1
            assert count
        notes.append("(e) ok")


def _random_girth8_graphs(count):
    out = [girth8_graph()]
    for seed in itertools.count(10):
        if len(out) >= count:
            break
        rng = np.random.default_rng(seed)
        edges = [(a, 5 + b) for a in range(5) for b in range(5)]
        pick = sorted(rng.choice(len(edges), int(rng.integers(13, 17)), replace=False))
        h = np.zeros((10, len(pick)), dtype=np.uint8)
        for v, i in enumerate(pick):
            h[list(edges[i]), v] = 1
        g = TannerGraph(Gf2Matrix.from_dense(h))
        if g.girth() == 8:
            out.append(Gf2Matrix.from_dense(h))
    return out


def test_criterion_6_toy_oracles(toy_codes):
    from test_ets import growth_oracle

    with criterion(6) as notes:
        t = time.perf_counter()
        for name, code in toy_codes.items():
            for side in "XZ":
                found = search_dir(code, side, config={"dir": {"generator": "full", "sizes": [code.n]}})
                assert found[0][0].weight == brute_min_logical(code, side), (name, side)
        notes.append(f"(a) {len(toy_codes)} toys")
        for name, m in (("T1", 3), ("T2", 2)):
            code = toy_codes[name]
            for side in "XZ":
                w = all_weights(latent_image(code, side).words)
                least = int(w[w > 0].min())
                v = exact_latent(code, m, least // m, sides=(side,))[side]
                assert v.status == "proved-exhaustive" and v.lower_bound == least
                assert exact_latent(code, m, least // m + 1, sides=(side,))[side].status == "refuted"
        notes.append("(b) T1 m=3, T2 m=2")
        graphs = _random_girth8_graphs(4)
        for h in graphs:
            g = TannerGraph(h)
            cycles = enumerate_8cycles(g)
            got = {c.vars: c.stage for c in grow_ets(g, cycles, max_stage=5).candidates if c.a <= 8}
            want = {S: k for S, k in growth_oracle(g, cycles, 5).items() if len(S) <= 8}
            assert got == want
        notes.append(f"(c) {len(graphs)} girth-8 graphs")
        assert time.perf_counter() - t < 600


def test_criterion_7_search_targets(catalog_codes):
    # soft: the achieved weights are reported, never gated
    c9 = catalog_codes["C9"]
    with criterion(7) as notes:
        runs = [
            ("blk m=4", lambda: search_blk(c9, "X", m=4, workers=4), 32),
            ("fib S={0,2}", lambda: search_fib(c9, "X", m=4, patterns=[(0, 2)], workers=4), 24),
            ("crt (3,256)", lambda: search_crt(c9, "X", 3, 256, workers=4), 96),
        ]
        for label, run, target in runs:
            found = run()
            best = found[0][0].weight if found else None
            flag = "" if best is not None and best <= target else " REGRESSION"
            notes.append(f"C9 {label}: {best} (target <= {target}){flag}")


def test_criterion_8_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dir": {"trials": 16}, "dec": {"trials": 64}, "ets": {"max_stage": 4}}))

    def run(name, workers):
        out = tmp_path / name
        code = main(["search", "--code", "C1", "--methods", "lat,blk,crt,dir,ets,dec", "--config", str(cfg),
                     "--seed", "11", "--workers", str(workers), "--out", str(out)])
        assert code == 0
        return {f.name: f.read_bytes() for f in sorted(out.iterdir())}

    with criterion(8) as notes:
        a = run("w1", 1)
        b = run("w4", 4)
        assert a == b
        notes.append(f"C1 store and reports byte-identical at 1 and 4 workers ({len(a['witnesses.jsonl'])} bytes)")
