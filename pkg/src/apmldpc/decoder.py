"""Decoder-failure residuals from belief-propagation syndrome decoding.

A pure error ``e`` and an estimate ``e_hat`` with the same syndrome differ by
a kernel vector ``e ^ e_hat``.  When that residual is nonzero and outside the
stabilizer row space it is a logical operator and bounds the distance.
Errors on the Z side are decoded against ``H_X`` and vice versa.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .apm import CssCode
from .config import section
from .gf2 import Gf2Matrix, Gf2Vector, in_row_space, syndrome_dense
from .witness import Certificate, Witness, certify

CHUNK = 8
DECODERS = ("sum-product", "min-sum")
_CLIP = 1e-12
_MAX_LLR = 60.0


def _check_p(p: float) -> float:
    if not 0.0 < p < 0.5:
        raise ValueError(f"flip probability must lie in (0, 1/2), got {p}")
    return float(p)


@dataclass(frozen=True)
class NoiseModel:
    p: float
    seed: int = 0

    def __post_init__(self):
        _check_p(self.p)


def sample_error(n: int, p: float, rng: np.random.Generator) -> Gf2Vector:
    """I.i.d. Bernoulli(p) flips on ``n`` coordinates."""
    _check_p(p)
    return Gf2Vector.from_dense((rng.random(n) < p).astype(np.uint8))


@dataclass
class BpResult:
    estimate: Gf2Vector
    converged: bool
    iterations: int


class _Edges:
    """Edge lists of a check matrix grouped by check, for flooding BP."""

    def __init__(self, h: Gf2Matrix):
        dense = h.to_dense()
        self.rows, self.cols = dense.shape
        c, v = np.nonzero(dense)  # row-major, so grouped by check
        self.check = c
        self.var = v
        self.deg = np.bincount(c, minlength=self.rows)
        self.live = np.flatnonzero(self.deg)
        self.start = (np.cumsum(self.deg) - self.deg)[self.live]
        self.seg = np.repeat(np.arange(self.live.size), self.deg[self.live])

    def per_check(self, ufunc, x):
        return ufunc.reduceat(x, self.start)


def _check_update_sp(E: _Edges, m_vc: np.ndarray, sign: np.ndarray) -> np.ndarray:
    t = np.tanh(np.clip(m_vc, -_MAX_LLR, _MAX_LLR) / 2)
    neg = t < 0
    mag = np.clip(np.abs(t), _CLIP, 1 - _CLIP)
    logs = np.log(mag)
    tot = E.per_check(np.add, logs)[E.seg] - logs
    parity = (E.per_check(np.add, neg.astype(np.int64))[E.seg] - neg) & 1
    prod = np.clip(np.exp(tot), 0, 1 - _CLIP)
    return np.where(parity ^ sign, -1.0, 1.0) * 2 * np.arctanh(prod)


def _check_update_ms(E: _Edges, m_vc: np.ndarray, sign: np.ndarray, scale: float) -> np.ndarray:
    neg = m_vc < 0
    mag = np.abs(m_vc)
    min1 = E.per_check(np.minimum, mag)
    idx = np.arange(mag.size)
    first = E.per_check(np.minimum, np.where(mag == min1[E.seg], idx, mag.size))
    masked = mag.copy()
    masked[first] = np.inf
    min2 = E.per_check(np.minimum, masked)
    other = np.where(idx == first[E.seg], min2[E.seg], min1[E.seg])
    other = np.where(np.isinf(other), 0.0, other)  # degree-1 checks carry no extrinsic magnitude
    parity = (E.per_check(np.add, neg.astype(np.int64))[E.seg] - neg) & 1
    return np.where(parity ^ sign, -1.0, 1.0) * scale * other


def bp_decode(h: Gf2Matrix, syndrome, p: float, max_iters: int = 100,
              decoder: str = "sum-product", ms_scale: float = 0.8,
              edges: _Edges | None = None) -> BpResult:
    """Flooding BP for ``h e = syndrome`` with channel prior ``p``.

    ``converged`` is set only when the hard decision reproduces the syndrome.
    """
    _check_p(p)
    if decoder not in DECODERS:
        raise ValueError(f"unknown decoder {decoder!r}")
    syn = np.asarray(syndrome.to_dense() if isinstance(syndrome, Gf2Vector) else syndrome,
                     dtype=np.uint8).reshape(-1)
    if syn.size != h.rows:
        raise ValueError(f"syndrome length {syn.size} != {h.rows} checks")
    E = edges or _Edges(h)
    n = h.cols
    prior = math.log((1 - p) / p)
    hard = np.zeros(n, dtype=np.uint8)
    if not syn.any():
        return BpResult(Gf2Vector.zeros(n), True, 0)
    if syn[E.deg == 0].any():
        return BpResult(Gf2Vector.zeros(n), False, 0)
    sign = syn[E.check].astype(bool)
    m_vc = np.full(E.var.size, prior)
    for it in range(1, max_iters + 1):
        if decoder == "sum-product":
            m_cv = _check_update_sp(E, m_vc, sign)
        else:
            m_cv = _check_update_ms(E, m_vc, sign, ms_scale)
        total = prior + np.bincount(E.var, weights=m_cv, minlength=n)
        hard = (total < 0).astype(np.uint8)
        got = np.bincount(E.check, weights=hard[E.var], minlength=h.rows).astype(np.int64) & 1
        if np.array_equal(got, syn):
            return BpResult(Gf2Vector.from_dense(hard), True, it)
        m_vc = total[E.var] - m_cv
    return BpResult(Gf2Vector.from_dense(hard), False, max_iters)


@dataclass
class DecodeOutcome:
    error: Gf2Vector
    estimate: Gf2Vector
    matched: bool
    residual: Gf2Vector
    kind: str  # zero, stabilizer, logical or unmatched


def decode_trial(code: CssCode, side: str, e: Gf2Vector, p: float, max_iters: int = 100,
                 decoder: str = "sum-product", ms_scale: float = 0.8,
                 edges: _Edges | None = None, profile=None) -> DecodeOutcome:
    """Decode one pure ``side`` error and classify its residual."""
    h = code.check(side)
    res = bp_decode(h, syndrome_dense(h, e), p, max_iters, decoder, ms_scale, edges)
    r = e ^ res.estimate
    if not res.converged:
        kind = "unmatched"
    elif r.is_zero():
        kind = "zero"
    elif in_row_space(profile if profile is not None else code.active(side).profile(), r):
        kind = "stabilizer"
    else:
        kind = "logical"
    return DecodeOutcome(e, res.estimate, res.converged, r, kind)


def harvest_residuals(code: CssCode, side: str, p: float | None = None, trials: int | None = None,
                      seed: int | None = None, config=None, workers: int = 1,
                      keep: int | None = 8) -> list[tuple[Witness, Certificate]]:
    """Certified logical residuals, lightest first, as a function of the seed only."""
    cfg = section(config, "dec")
    p = _check_p(cfg["p"] if p is None else p)
    trials = int(cfg["trials"] if trials is None else trials)
    seed = int(cfg["seed"] if seed is None else seed)
    opts = dict(max_iters=int(cfg["max_iters"]), decoder=cfg["decoder"], ms_scale=float(cfg["ms_scale"]))
    edges = _Edges(code.check(side))
    prof = code.active(side).profile()

    def run(chunk):
        rng = np.random.default_rng([seed, 5, chunk])
        out = []
        for k in range(min(CHUNK, trials - chunk * CHUNK)):
            e = sample_error(code.n, p, rng)
            oc = decode_trial(code, side, e, p, edges=edges, profile=prof, **opts)
            if oc.kind == "logical":
                out.append((oc.residual.weight, chunk * CHUNK + k, oc.residual))
        return out

    chunks = range(math.ceil(trials / CHUNK))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            batches = list(ex.map(run, chunks))
    else:
        batches = [run(c) for c in chunks]
    seen = set()
    results = []
    for w, trial, r in sorted(itertools.chain.from_iterable(batches), key=lambda t: t[:2]):
        if r in seen:
            continue
        seen.add(r)
        cert = certify(code, side, r)
        if cert.accepted:
            params = {"p": p, "trial": trial, "decoder": opts["decoder"], "max_iters": opts["max_iters"]}
            results.append((Witness.from_vector(code.id, side, "dec", r, **params), cert))
            if keep is not None and len(results) >= keep:
                break
    return results
