"""Restricted-lift searches and the direct restricted-support CSS search.

Vectors of length ``N * P`` are handled as ``N`` blocks of length ``P``.
With ``P = m * Q`` the ``m``-block-constant vectors repeat each block's first
``Q`` entries ``m`` times; ``compress``/``lift`` move between the two views.
A fiber pattern ``S`` lifts a quotient vector along the fibers in ``S`` only.
The CRT stripe space of a coprime split ``P = q1 * q2`` is spanned, block by
block, by residue-class indicators modulo ``q1`` and modulo ``q2``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .apm import CssCode, active_matrices
from .config import section
from .gf2 import Gf2Matrix, Gf2Vector, in_row_space, kernel_matrix, pack_bits, unpack_bits
from .latent import divisors
from .lowweight import EXHAUSTIVE_CAP, low_weight_vectors
from .witness import Certificate, Witness, certify

CHUNK = 8  # trials per deterministic partition


@dataclass(frozen=True)
class BlockStructure:
    P: int
    m: int

    def __post_init__(self):
        if self.m < 1 or self.P % self.m:
            raise ValueError(f"block factor {self.m} does not divide P={self.P}")

    @property
    def Q(self) -> int:
        return self.P // self.m


@dataclass(frozen=True)
class FiberPattern:
    m: int
    S: tuple[int, ...]

    def __post_init__(self):
        S = tuple(sorted(set(int(j) for j in self.S)))
        if not S:
            raise ValueError("fiber pattern must be nonempty")
        if S[0] < 0 or S[-1] >= self.m:
            raise ValueError(f"fiber index outside Z/{self.m}")
        object.__setattr__(self, "S", S)

    @property
    def proper(self) -> bool:
        return len(self.S) < self.m


@dataclass(frozen=True)
class CrtSplit:
    q1: int
    q2: int

    def __post_init__(self):
        if self.q1 < 1 or self.q2 < 1 or math.gcd(self.q1, self.q2) != 1:
            raise ValueError(f"({self.q1}, {self.q2}) is not a coprime pair")

    @property
    def P(self) -> int:
        return self.q1 * self.q2


def _dense(v) -> np.ndarray:
    if isinstance(v, Gf2Vector):
        return v.to_dense()
    return np.asarray(v, dtype=np.uint8)


def is_block_constant(v, P: int, m: int) -> bool:
    bs = BlockStructure(P, m)
    d = _dense(v)
    if d.size % P:
        raise ValueError(f"length {d.size} is not a multiple of P={P}")
    r = d.reshape(-1, m, bs.Q)
    return bool((r == r[:, :1, :]).all())


def compress(v, P: int, m: int) -> Gf2Vector:
    """pi_m: keep the first Q entries of each block (requires block constancy)."""
    bs = BlockStructure(P, m)
    if not is_block_constant(v, P, m):
        raise ValueError(f"vector is not {m}-block constant")
    d = _dense(v).reshape(-1, m, bs.Q)
    return Gf2Vector.from_dense(d[:, 0, :].reshape(-1))


def lift(vbar, P: int, m: int) -> Gf2Vector:
    """iota_m: repeat each quotient block m times."""
    bs = BlockStructure(P, m)
    d = _dense(vbar)
    if d.size % bs.Q:
        raise ValueError(f"length {d.size} is not a multiple of Q={bs.Q}")
    return Gf2Vector.from_dense(np.tile(d.reshape(-1, 1, bs.Q), (1, m, 1)).reshape(-1))


def fiber_lift(y, P: int, m: int, S: Iterable[int]) -> Gf2Vector:
    """Phi_{m,S}: copy each quotient block into the fibers listed in S."""
    pat = FiberPattern(m, tuple(S))
    Q = BlockStructure(P, m).Q
    d = _dense(y)
    if d.size % Q:
        raise ValueError(f"length {d.size} is not a multiple of Q={Q}")
    out = np.zeros((d.size // Q, m, Q), dtype=np.uint8)
    out[:, list(pat.S), :] = d.reshape(-1, 1, Q)
    return Gf2Vector.from_dense(out.reshape(-1))


def compressed_checks(code: CssCode, m: int) -> tuple[Gf2Matrix, Gf2Matrix]:
    """Active matrices of the template with every affine map reduced mod Q."""
    bs = BlockStructure(code.spec.P, m)
    if m == 1:
        return code.H_X, code.H_Z
    return active_matrices(code.spec.reduce(bs.Q))


def _column_fold(h: Gf2Matrix, P: int, m: int, S: Sequence[int]) -> Gf2Matrix:
    Q = P // m
    d = h.to_dense().reshape(h.rows, -1, m, Q)
    return Gf2Matrix.from_dense((d[:, :, list(S), :].sum(axis=2) & 1).reshape(h.rows, -1))


def fiber_checks(code: CssCode, m: int, S: Iterable[int]) -> tuple[Gf2Matrix, Gf2Matrix]:
    """``(H_X Phi, H_Z Phi)`` for the fiber lift Phi_{m,S}."""
    pat = FiberPattern(m, tuple(S))
    BlockStructure(code.spec.P, m)
    P = code.spec.P
    return _column_fold(code.H_X, P, m, pat.S), _column_fold(code.H_Z, P, m, pat.S)


# CRT stripes


def crt_expand(y, L: int, q1: int, q2: int) -> Gf2Vector:
    """T(y): per block, alpha (q1 entries) on residues mod q1 plus beta (q2 entries) mod q2."""
    split = CrtSplit(q1, q2)
    d = _dense(y).reshape(L, q1 + q2)
    t = np.arange(split.P)
    out = d[:, t % q1] ^ d[:, q1 + t % q2]
    return Gf2Vector.from_dense(out.reshape(-1))


def _crt_fold(h: Gf2Matrix, L: int, q1: int, q2: int) -> Gf2Matrix:
    P = q1 * q2
    d = h.to_dense().reshape(h.rows, L, P)
    a = d.reshape(h.rows, L, P // q1, q1).sum(axis=2) & 1
    b = d.reshape(h.rows, L, P // q2, q2).sum(axis=2) & 1
    return Gf2Matrix.from_dense(np.concatenate([a, b], axis=2).reshape(h.rows, -1))


@dataclass
class CrtMap:
    split: CrtSplit
    L: int
    restricted: Gf2Matrix  # H o T
    kernel: Gf2Matrix  # kernel of H o T in coefficient coordinates

    @property
    def inputs(self) -> int:
        return self.L * (self.split.q1 + self.split.q2)

    def expand(self, y) -> Gf2Vector:
        return crt_expand(y, self.L, self.split.q1, self.split.q2)

    def expand_rows(self, m: Gf2Matrix) -> np.ndarray:
        """Packed T-images of the rows of ``m``."""
        q1, q2 = self.split.q1, self.split.q2
        d = m.to_dense().reshape(m.rows, self.L, q1 + q2)
        t = np.arange(q1 * q2)
        return pack_bits((d[:, :, t % q1] ^ d[:, :, q1 + t % q2]).reshape(m.rows, -1))


def crt_parametrize(code: CssCode, q1: int, q2: int, side: str = "X") -> CrtMap:
    split = CrtSplit(q1, q2)
    if split.P != code.spec.P:
        raise ValueError(f"{q1}*{q2} != P={code.spec.P}")
    L = code.spec.L
    restricted = _crt_fold(code.check(side), L, q1, q2)
    return CrtMap(split, L, restricted, kernel_matrix(restricted))


def coprime_splits(P: int) -> list[tuple[int, int]]:
    return [(q, P // q) for q in divisors(P) if 1 < q < P // q and math.gcd(q, P // q) == 1]


# trial supports


class _Graph:
    """Variable-check adjacency of a check matrix, for neighborhood supports."""

    def __init__(self, h: Gf2Matrix):
        rows, cols = np.nonzero(h.to_dense())
        a = sp.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=h.shape)
        self.c2v = a
        self.v2c = a.T.tocsr()
        self.n = h.cols

    def ball(self, seed: int, size: int, rng: np.random.Generator) -> np.ndarray:
        chosen = [seed]
        mark = {seed}
        frontier = [seed]
        while frontier and len(chosen) < size:
            nxt = []
            for v in frontier:
                checks = self.v2c.indices[self.v2c.indptr[v]:self.v2c.indptr[v + 1]]
                for c in rng.permutation(checks):
                    for u in rng.permutation(self.c2v.indices[self.c2v.indptr[c]:self.c2v.indptr[c + 1]]):
                        u = int(u)
                        if u not in mark:
                            mark.add(u)
                            chosen.append(u)
                            nxt.append(u)
            frontier = nxt
        return np.sort(np.asarray(chosen[:size], dtype=np.int64))


def isd_trial(hd: np.ndarray, rng: np.random.Generator | None, p: int,
              accept: Callable[[np.ndarray], bool], limit: int, pool: int = 4096) -> list[np.ndarray]:
    """One Lee-Brickell round: information set, all 1- and (if p >= 2) 2-column words.

    ``rng=None`` keeps the natural column order, which suits block-structured
    matrices.  Returns supports (in the column coordinates of ``hd``) of the
    lightest kernel words passing ``accept``.
    """
    n = hd.shape[1]
    perm = np.arange(n) if rng is None else rng.permutation(n)
    prof = Gf2Matrix.from_dense(hd[:, perm]).profile()
    r = prof.rank
    free = np.setdiff1d(np.arange(n), prof.pivots, assume_unique=True)
    if free.size == 0:
        return []
    # kernel word for free column f: bit f plus pivot bits from column f of the RREF
    C = pack_bits(prof.basis.columns(free).T) if r else np.zeros((free.size, 1), dtype=np.uint64)
    w1 = 1 + np.bitwise_count(C).sum(axis=1, dtype=np.int64)
    cand_w = [w1]
    cand_i = [np.arange(free.size)]
    cand_j = [np.full(free.size, -1)]
    if p >= 2:
        thr = int(np.partition(w1, min(pool, w1.size) - 1)[min(pool, w1.size) - 1])
        for i in range(free.size - 1):
            w2 = 2 + np.bitwise_count(C[i + 1:] ^ C[i]).sum(axis=1, dtype=np.int64)
            sel = np.flatnonzero(w2 <= thr)
            if sel.size:
                cand_w.append(w2[sel])
                cand_i.append(np.full(sel.size, i))
                cand_j.append(sel + i + 1)
    W = np.concatenate(cand_w)
    I = np.concatenate(cand_i)
    Jx = np.concatenate(cand_j)
    order = np.lexsort((Jx, I, W))[:pool]
    out = []
    pivots = prof.pivots
    for o in order:
        i, j = int(I[o]), int(Jx[o])
        bits = C[i] ^ C[j] if j >= 0 else C[i]
        piv = pivots[unpack_bits(bits, r).astype(bool)] if r else np.empty(0, dtype=np.int64)
        cols = [free[i]] + ([free[j]] if j >= 0 else [])
        supp = np.sort(perm[np.concatenate([piv, cols]).astype(np.int64)])
        if accept(supp):
            out.append(supp)
            if len(out) >= limit:
                break
    return out


def make_supports(generator: str, h: Gf2Matrix, size: int, rng: np.random.Generator,
                  block: int | None = None, graph: _Graph | None = None) -> np.ndarray:
    n = h.cols
    if generator == "random":
        return np.sort(rng.choice(n, size=min(size, n), replace=False))
    if generator == "full":
        return np.arange(n)
    if generator == "neighborhood":
        graph = graph or _Graph(h)
        return graph.ball(int(rng.integers(n)), size, rng)
    if generator == "comb":
        # block-structured: a random quotient support repeated over every fiber
        if not block:
            raise ValueError("comb supports need a block length")
        ms = [m for m in divisors(block) if 2 <= m <= 8] or [1]
        m = int(rng.choice(ms))
        Q = block // m
        nq = n // m
        base = rng.choice(nq, size=max(1, min(nq, size // m)), replace=False)
        c, t = np.divmod(base, Q)
        full = (c[:, None] * block + t[:, None] + Q * np.arange(m)[None, :]).reshape(-1)
        return np.unique(full)
    raise ValueError(f"unknown support generator {generator!r}")


@dataclass
class _Found:
    weight: int
    order: tuple
    vector: Gf2Vector  # full-length lifted vector
    local: np.ndarray  # support in search coordinates
    params: dict


def _restricted_low_weight(hd: np.ndarray, support: np.ndarray, accept, limit: int,
                           cap: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Low-weight kernel vectors of ``hd[:, support]`` passing ``accept`` (search coordinates)."""
    sub = hd[:, support]
    sub = sub[sub.any(axis=1)]
    ker = kernel_matrix(Gf2Matrix.from_dense(sub)) if sub.shape[0] else Gf2Matrix.identity(support.size)
    if ker.rows == 0:
        return []

    def to_full(words):
        local = unpack_bits(words, support.size)
        return support[local.astype(bool)]

    vecs, _ = low_weight_vectors(ker, accept=lambda w: accept(to_full(w)), limit=limit, exhaustive_cap=cap)
    return [to_full(w) for w in vecs]


def kernel_search(h: Gf2Matrix, lift_fn: Callable[[np.ndarray], Gf2Vector],
                  accept_fn: Callable[[Gf2Vector], bool], *, sizes: Sequence[int], trials: int,
                  generator: str, seed: int, workers: int = 1, block: int | None = None,
                  keep: int = 8, per_trial: int = 2, cap: int = EXHAUSTIVE_CAP,
                  tag: Sequence = ()) -> list[_Found]:
    """Restricted-support kernel searches on ``h``; results are lifted and filtered.

    Trials are split into fixed partitions of ``CHUNK`` with their own RNG
    streams, so the output does not depend on ``workers``.
    """
    hd = h.to_dense()
    graph = _Graph(h) if generator == "neighborhood" else None
    jobs = []
    for si, size in enumerate(sizes):
        count = 1 if generator == "full" else trials
        for chunk in range(0, count, CHUNK):
            jobs.append((si, int(size), chunk, min(CHUNK, count - chunk)))

    def accept_local(idx: np.ndarray) -> bool:
        return accept_fn(lift_fn(idx))

    def run(job):
        si, size, chunk, count = job
        rng = np.random.default_rng([seed, *tag, si, chunk // CHUNK])
        found = []
        for k in range(count):
            if generator == "isd":
                first = chunk == 0 and k == 0
                hits = isd_trial(hd, None if first else rng, size, accept_local, per_trial)
            else:
                supp = make_supports(generator, h, size, rng, block=block, graph=graph)
                hits = _restricted_low_weight(hd, supp, accept_local, per_trial, cap)
            for rank_in_trial, idx in enumerate(hits):
                v = lift_fn(idx)
                found.append(_Found(v.weight, (si, chunk + k, rank_in_trial), v, idx,
                                    {"generator": generator, "size": size, "trial": chunk + k}))
        return found

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            batches = list(ex.map(run, jobs))
    else:
        batches = [run(j) for j in jobs]
    return _best_unique(itertools.chain.from_iterable(batches), keep)


def _best_unique(found: Iterable[_Found], keep: int | None) -> list[_Found]:
    seen = set()
    out = []
    for f in sorted(found, key=lambda f: (f.weight, f.order)):
        if f.vector in seen:
            continue
        seen.add(f.vector)
        out.append(f)
        if keep is not None and len(out) >= keep:
            break
    return out


def _non_stabilizer(code: CssCode, side: str) -> Callable[[Gf2Vector], bool]:
    prof = code.active(side).profile()
    return lambda v: not v.is_zero() and not in_row_space(prof, v)


def _certified(code: CssCode, side: str, method: str, found: Iterable[_Found]) -> list[tuple[Witness, Certificate]]:
    out = []
    for f in found:
        cert = certify(code, side, f.vector)
        if cert.accepted:
            out.append((Witness.from_vector(code.id, side, method, f.vector, **f.params), cert))
    return out


def _default_m_list(P: int) -> list[int]:
    return [m for m in divisors(P) if 2 <= m <= 8]


def _sizes(cfg: dict, default: Sequence[int]) -> list[int]:
    """Trial-support sizes; for ISD trials the single entry is Lee-Brickell's p."""
    if cfg.get("sizes"):
        return [int(s) for s in cfg["sizes"]]
    return [2] if cfg.get("generator") == "isd" else list(default)


def search_blk(code: CssCode, side: str, m: int | None = None, config=None,
               workers: int = 1) -> list[tuple[Witness, Certificate]]:
    """Kernel search on the block-compressed check matrix, lifted by iota_m."""
    cfg = section(config, "blk")
    P = code.spec.P
    m_list = [m] if m is not None else (cfg["m_list"] or _default_m_list(P))
    accept = _non_stabilizer(code, side)
    found = []
    for mi, mm in enumerate(m_list):
        bs = BlockStructure(P, mm)
        hx_bar, hz_bar = compressed_checks(code, mm)
        hbar = hz_bar if side == "X" else hx_bar
        n_bar = hbar.cols

        def lift_fn(idx, mm=mm, n_bar=n_bar):
            return lift(Gf2Vector.from_support(n_bar, idx).to_dense(), P, mm)

        res = kernel_search(hbar, lift_fn, accept, sizes=_sizes(cfg, [16, 24, 32, 48]),
                            trials=int(cfg["trials"]), generator=cfg["generator"], seed=int(cfg["seed"]),
                            workers=workers, block=bs.Q, keep=cfg["keep"], tag=(1, mm))
        for f in res:
            f.params.update(m=mm, Q=bs.Q, quotient_support=[int(i) for i in f.local])
            f.order = (mi, *f.order)
        found.extend(res)
    return _certified(code, side, "blk", _best_unique(found, cfg["keep"]))


def fiber_patterns(m: int, max_patterns: int | None = None, rng: np.random.Generator | None = None) -> list[tuple[int, ...]]:
    """Proper nonempty fiber patterns; all of them for m <= 4, else a sample."""
    pats = [S for r in range(1, m) for S in itertools.combinations(range(m), r)]
    if m <= 4 or max_patterns is None or len(pats) <= max_patterns:
        return pats
    rng = rng or np.random.default_rng(m)
    pick = np.sort(rng.choice(len(pats), size=max_patterns, replace=False))
    return [pats[i] for i in pick]


def search_fib(code: CssCode, side: str, m: int | None = None, patterns=None, config=None,
               workers: int = 1) -> list[tuple[Witness, Certificate]]:
    """Kernel search on ``H Phi_{m,S}`` for proper fiber patterns S."""
    cfg = section(config, "fib")
    P = code.spec.P
    m_list = [m] if m is not None else (cfg["m_list"] or _default_m_list(P))
    accept = _non_stabilizer(code, side)
    found = []
    for mi, mm in enumerate(m_list):
        bs = BlockStructure(P, mm)
        pats = patterns if patterns is not None else cfg["patterns"]
        if pats is None:
            pats = fiber_patterns(mm, cfg["max_patterns"], np.random.default_rng([int(cfg["seed"]), mm]))
        for pi, S in enumerate(pats):
            pat = FiberPattern(mm, tuple(S))
            if not pat.proper:
                raise ValueError(f"fiber pattern {pat.S} is full; use search_blk")
            fx, fz = fiber_checks(code, mm, pat.S)
            h = fz if side == "X" else fx

            def lift_fn(idx, mm=mm, S=pat.S, nq=h.cols):
                return fiber_lift(Gf2Vector.from_support(nq, idx).to_dense(), P, mm, S)

            res = kernel_search(h, lift_fn, accept, sizes=_sizes(cfg, [16, 24, 32]),
                                trials=int(cfg["trials"]), generator=cfg["generator"], seed=int(cfg["seed"]),
                                workers=workers, block=bs.Q, keep=cfg["keep"], tag=(2, mm, pi))
            for f in res:
                f.params.update(m=mm, Q=bs.Q, S=list(pat.S), quotient_support=[int(i) for i in f.local])
                f.order = (mi, pi, *f.order)
            found.extend(res)
    return _certified(code, side, "fib", _best_unique(found, cfg["keep"]))


def _combo_candidates(images: np.ndarray, combo_max: int, budget: int, pool: int):
    """Lightest sums of at most ``combo_max`` image rows, as (weight, rows) pairs."""
    d = images.shape[0]
    weights = np.bitwise_count(images).sum(axis=1, dtype=np.int64)
    best = [(int(weights[i]), (i,)) for i in range(d) if weights[i]]
    budget -= d
    for r in range(2, combo_max + 1):
        for head in itertools.combinations(range(d), r - 1):
            if budget <= 0:
                break
            last = head[-1] + 1
            if last >= d:
                continue
            acc = np.bitwise_xor.reduce(images[list(head)], axis=0)
            w = np.bitwise_count(images[last:] ^ acc).sum(axis=1, dtype=np.int64)
            budget -= w.size
            keep = np.flatnonzero(w > 0)
            best.extend((int(w[j]), (*head, last + int(j))) for j in keep)
            if len(best) > 4 * pool:
                best.sort()
                del best[pool:]
    best.sort()
    return best[:pool]


def search_crt(code: CssCode, side: str, q1: int | None = None, q2: int | None = None,
               config=None, workers: int = 1) -> list[tuple[Witness, Certificate]]:
    """Low-weight vectors of Ker(H) inside the CRT stripe space.

    Two candidate sources: sparse combinations of the restricted kernel basis,
    and ISD rounds on ``H o T``; every candidate is scored on ``T(y)``.
    """
    cfg = section(config, "crt")
    P = code.spec.P
    if q1 is not None:
        splits = [(q1, q2 if q2 is not None else P // q1)]
    else:
        splits = [tuple(s) for s in (cfg["splits"] or coprime_splits(P))]
    accept = _non_stabilizer(code, side)
    keep = cfg["keep"]
    found = []
    for si, (a, b) in enumerate(splits):
        cmap = crt_parametrize(code, a, b, side)
        if cmap.kernel.rows == 0:
            continue
        images = cmap.expand_rows(cmap.kernel)
        accepted = 0
        for ci, (w, rows) in enumerate(_combo_candidates(images, int(cfg["combo_max"]),
                                                          int(cfg["budget"]), 4096)):
            v = Gf2Vector(code.n, np.bitwise_xor.reduce(images[list(rows)], axis=0))
            if not accept(v):
                continue
            found.append(_Found(w, (si, 0, ci), v, np.empty(0, dtype=np.int64),
                                {"q1": a, "q2": b, "source": "basis", "rows": list(rows)}))
            accepted += 1
            if accepted >= keep:
                break
        if int(cfg.get("trials", 0)) > 0:
            def lift_fn(idx, cmap=cmap):
                return cmap.expand(Gf2Vector.from_support(cmap.inputs, idx).to_dense())

            res = kernel_search(cmap.restricted, lift_fn, accept, sizes=[2], trials=int(cfg["trials"]),
                                generator="isd", seed=int(cfg["seed"]), workers=workers, keep=keep,
                                tag=(4, a, b))
            for f in res:
                f.params.update(q1=a, q2=b, source="isd", coefficients=[int(i) for i in f.local])
                f.order = (si, 1, *f.order)
            found.extend(res)
    return _certified(code, side, "crt", _best_unique(found, keep))


def search_dir(code: CssCode, side: str, config=None, workers: int = 1) -> list[tuple[Witness, Certificate]]:
    """Restricted-support kernel searches directly on the full check matrix."""
    cfg = section(config, "dir")
    h = code.check(side)
    sizes = _sizes(cfg, [2 * w for w in range(8, 65, 8)])
    accept = _non_stabilizer(code, side)
    n = code.n

    def lift_fn(idx):
        return Gf2Vector.from_support(n, idx)

    res = kernel_search(h, lift_fn, accept, sizes=sizes, trials=int(cfg["trials"]),
                        generator=cfg["generator"], seed=int(cfg["seed"]), workers=workers,
                        block=code.spec.P, keep=cfg["keep"], tag=(3,))
    return _certified(code, side, "dir", res)
