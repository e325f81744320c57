"""Latent witnesses from the kernel of the active-latent mixed product.

For the X side a coefficient vector ``lam`` with ``H_Z Ht_X^T lam = 0`` lifts
to ``x = lam^T Ht_X`` in ``Ker(H_Z)``; only the row-space exclusion is left
to check.  With (J, L) = (3, 12) the mixed product is block diagonal in
``Psi_3^T`` so the search can be done one latent block at a time.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .apm import CssCode, psi
from .config import section
from .gf2 import Gf2Matrix, Gf2Vector, combine_rows, kernel_matrix, mat_mul
from .witness import Certificate, Witness, certify


def mixed_product(code: CssCode, side: str) -> Gf2Matrix:
    """``H_Z Ht_X^T`` (side X) or ``H_X Ht_Z^T`` (side Z), assembled from Psi blocks.

    Block (i, l) is ``Psi_r^T`` with r = i - J - l on the X side and ``Psi_r``
    with r = J + l - i on the Z side (indices mod L/2).
    """
    spec = code.spec
    J, P, half = spec.J, spec.P, spec.half
    s = spec.latent_blocks
    if s == 0:
        raise ValueError(f"{spec.id}: no latent rows")
    cache: dict[int, np.ndarray] = {}
    out = np.zeros((J * P, s * P), dtype=np.uint8)
    for i in range(J):
        for ell in range(s):
            r = (i - J - ell) % half if side == "X" else (J + ell - i) % half
            if r not in cache:
                cache[r] = psi(spec, r).to_dense()
            blk = cache[r].T if side == "X" else cache[r]
            out[i * P:(i + 1) * P, ell * P:(ell + 1) * P] = blk
    return Gf2Matrix.from_dense(out)


def mixed_product_direct(code: CssCode, side: str) -> Gf2Matrix:
    """Same matrix by explicit multiplication; used as a cross-check."""
    return mat_mul(code.check(side), code.latent(side).transpose())


def latent_lift(code: CssCode, side: str, lam) -> Gf2Vector:
    """``lam^T Ht``; ``lam`` is a Gf2Vector, a dense 0/1 uint8 array or a list of indices."""
    lat = code.latent(side)
    if isinstance(lam, Gf2Vector):
        if lam.n != lat.rows:
            raise ValueError(f"coefficient length {lam.n} != latent rows {lat.rows}")
        idx = lam.support()
    elif isinstance(lam, np.ndarray) and lam.dtype in (np.uint8, np.bool_):
        if lam.size != lat.rows:
            raise ValueError(f"coefficient length {lam.size} != latent rows {lat.rows}")
        idx = np.flatnonzero(lam)
    else:
        idx = np.asarray(sorted({int(i) for i in lam}), dtype=np.int64)
        if idx.size and (idx[0] < 0 or idx[-1] >= lat.rows):
            raise ValueError("coefficient index out of range")
    return combine_rows(lat, idx)


@dataclass
class LatentCandidate:
    side: str
    lam: tuple[int, ...]
    placement: dict = field(default_factory=dict)
    vector: Gf2Vector | None = None


def divisors(n: int) -> list[int]:
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def _comb_syndromes(Md: np.ndarray, P: int, ell: int, period: int) -> np.ndarray:
    """Syndrome columns (JP x period) of every comb with the given period in block ``ell``."""
    blk = Md[:, ell * P:(ell + 1) * P]
    return blk.reshape(blk.shape[0], P // period, period).sum(axis=1) & 1


def _comb_candidates(Md: np.ndarray, P: int, s: int, periods: list[int]):
    for q in periods:
        teeth = P // q
        syn = [_comb_syndromes(Md, P, ell, q) for ell in range(s)]
        for ell in range(s):
            for t in np.flatnonzero(~syn[ell].any(axis=0)):
                lam = tuple(ell * P + int(t) + j * q for j in range(teeth))
                yield lam, {"source": "comb", "period": q, "base": int(t), "block": ell}
        if s > 1:
            total = np.bitwise_xor.reduce(np.stack(syn), axis=0)
            for t in np.flatnonzero(~total.any(axis=0)):
                lam = tuple(ell * P + int(t) + j * q for ell in range(s) for j in range(teeth))
                yield lam, {"source": "comb", "period": q, "base": int(t), "block": "all"}


def _sparse_candidates(M: Gf2Matrix, max_weight: int, budget: int):
    """All coefficient vectors of weight <= max_weight in the kernel, if that sweep fits the budget."""
    n = M.cols
    total = sum(math.comb(n, w) for w in range(1, max_weight + 1))
    if total > budget:
        return
    cols = M.transpose().words  # row c = column c of M
    zero = np.zeros(cols.shape[1], dtype=np.uint64)
    for w in range(1, max_weight + 1):
        for combo in itertools.combinations(range(n), w):
            acc = zero.copy()
            for c in combo:
                acc ^= cols[c]
            if not acc.any():
                yield combo, {"source": "sparse", "weight": w}


def _kernel_candidates(M: Gf2Matrix, max_pairs: int):
    K = kernel_matrix(M)
    supports = K.row_supports()
    for i, sup in enumerate(supports):
        yield tuple(int(x) for x in sup), {"source": "kernel", "basis": [i]}
    pairs = 0
    for i, j in itertools.combinations(range(len(supports)), 2):
        if pairs >= max_pairs:
            return
        pairs += 1
        lam = tuple(sorted(set(supports[i].tolist()) ^ set(supports[j].tolist())))
        yield lam, {"source": "kernel", "basis": [i, j]}


def latent_candidates(code: CssCode, side: str, config=None) -> list[LatentCandidate]:
    """Feasible coefficient vectors in generation order, lifted and deduplicated."""
    cfg = section(config, "lat")
    spec = code.spec
    P, s = spec.P, spec.latent_blocks
    if s == 0:
        return []
    M = mixed_product(code, side)
    Md = M.to_dense()
    periods = cfg["periods"] or [q for q in divisors(P) if 8 * q >= P]
    for q in periods:
        if P % q:
            raise ValueError(f"period {q} does not divide P={P}")
    budget = int(cfg["budget"])
    sources = itertools.chain(
        _comb_candidates(Md, P, s, periods),
        _sparse_candidates(M, int(cfg.get("max_weight", 3) or 0), budget),
        _kernel_candidates(M, int(cfg["max_pairs"])),
    )
    seen: set[Gf2Vector] = set()
    out = []
    for count, (lam, placement) in enumerate(sources):
        if count >= budget:
            break
        if not lam:
            continue
        x = latent_lift(code, side, lam)
        if x.is_zero() or x in seen:
            continue
        seen.add(x)
        out.append(LatentCandidate(side, lam, placement, x))
    return out


def search_latent(code: CssCode, side: str, config=None) -> list[tuple[Witness, Certificate]]:
    """Certified latent witnesses, lightest first (at most ``lat.keep`` of them)."""
    cfg = section(config, "lat")
    keep = cfg["keep"]
    cands = latent_candidates(code, side, config)
    order = sorted(range(len(cands)), key=lambda i: (cands[i].vector.weight, i))
    results = []
    for i in order:
        c = cands[i]
        cert = certify(code, side, c.vector)
        if not cert.accepted:
            continue
        params = dict(c.placement)
        params["lambda"] = list(c.lam) if len(c.lam) <= 64 else len(c.lam)
        results.append((Witness.from_vector(code.id, side, "lat", c.vector, **params), cert))
        if keep is not None and len(results) >= keep:
            break
    return results
