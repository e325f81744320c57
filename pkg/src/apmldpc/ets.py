"""Cycle-8-connected elementary trapping sets.

For a check matrix ``H`` and variable set ``S`` the odd-check boundary is the
syndrome ``H 1_S``.  Sets with empty boundary are kernel vectors; two sets
with the same two-check boundary differ by a kernel vector.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .apm import CssCode, girth
from .config import section
from .gf2 import Gf2Matrix, Gf2Vector
from .witness import Certificate, Witness, certify

log = logging.getLogger(__name__)


class GirthError(ValueError):
    pass


class TannerGraph:
    def __init__(self, h: Gf2Matrix):
        self.h = h
        self.n_vars = h.cols
        self.n_checks = h.rows
        rows, cols = np.nonzero(h.to_dense())
        order = np.lexsort((rows, cols))
        self._vc_ptr = np.searchsorted(cols[order], np.arange(h.cols + 1))
        self._vc = rows[order]
        order = np.lexsort((cols, rows))
        self._cv_ptr = np.searchsorted(rows[order], np.arange(h.rows + 1))
        self._cv = cols[order]

    def checks_of(self, v: int) -> np.ndarray:
        return self._vc[self._vc_ptr[v]:self._vc_ptr[v + 1]]

    def vars_of(self, c: int) -> np.ndarray:
        return self._cv[self._cv_ptr[c]:self._cv_ptr[c + 1]]

    def check_degrees(self, S: Iterable[int]) -> dict[int, int]:
        S = np.fromiter(S, dtype=np.int64)
        if S.size == 0:
            return {}
        nb = np.concatenate([self.checks_of(int(v)) for v in S])
        cs, cnt = np.unique(nb, return_counts=True)
        return dict(zip(cs.tolist(), cnt.tolist()))

    def girth(self) -> float:
        return girth(self.h)


def boundary(g: TannerGraph, S: Iterable[int]) -> frozenset[int]:
    """Checks with an odd number of neighbors in ``S``."""
    return frozenset(c for c, d in g.check_degrees(S).items() if d % 2)


@dataclass(frozen=True)
class Cycle:
    """An 8-cycle as its canonical alternating sequence v0 c0 v1 c1 v2 c2 v3 c3."""

    seq: tuple[int, ...]

    @property
    def vars(self) -> tuple[int, ...]:
        return self.seq[0::2]

    @property
    def checks(self) -> tuple[int, ...]:
        return self.seq[1::2]


def canonical_cycle(seq: Sequence[int]) -> tuple[int, ...]:
    """Least rotation/reflection that starts at a variable (even position)."""
    seq = tuple(int(x) for x in seq)
    k = len(seq)
    rev = tuple(seq[(-i) % k] for i in range(k))  # v0 c3 v3 c2 ...
    forms = []
    for s in (seq, rev):
        for r in range(0, k, 2):
            forms.append(s[r:] + s[:r])
    return min(forms)


def _four_paths(g: TannerGraph) -> np.ndarray:
    """All paths v0 - c0 - v1 - c1 - v2 with v0 < v2, as rows (v0, c0, v1, c1, v2)."""
    # wedges v - c - u with u != v, grouped by first vertex
    wv, wc, wu = [], [], []
    for c in range(g.n_checks):
        vs = g.vars_of(c)
        if vs.size < 2:
            continue
        a, b = np.meshgrid(vs, vs, indexing="ij")
        mask = a != b
        wv.append(a[mask])
        wu.append(b[mask])
        wc.append(np.full(int(mask.sum()), c))
    if not wv:
        return np.zeros((0, 5), dtype=np.int64)
    wv = np.concatenate(wv)
    wc = np.concatenate(wc)
    wu = np.concatenate(wu)
    order = np.lexsort((wu, wc, wv))
    wv, wc, wu = wv[order], wc[order], wu[order]
    ptr = np.searchsorted(wv, np.arange(g.n_vars + 1))
    # join wedge (v0, c0, v1) with wedge (v1, c1, v2)
    cnt = ptr[wu + 1] - ptr[wu]
    first = np.repeat(np.arange(wv.size), cnt)
    offs = np.arange(first.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    second = ptr[wu[first]] + offs
    keep = (wc[second] != wc[first]) & (wu[second] != wv[first]) & (wv[first] < wu[second])
    first, second = first[keep], second[keep]
    return np.stack([wv[first], wc[first], wu[first], wc[second], wu[second]], axis=1)


def enumerate_8cycles(g: TannerGraph, budget: int | None = None, check_girth: bool = True) -> list[Cycle]:
    """Distinct 8-cycles in canonical order; truncated to ``budget`` if given.

    Under girth 8 any two distinct 4-paths with the same endpoints close an
    8-cycle, so cycles are read off from endpoint groups.
    """
    if check_girth:
        gi = g.girth()
        if gi < 8:
            raise GirthError(f"Tanner graph girth {gi} < 8; shorter cycles precede 8-cycles")
    paths = _four_paths(g)
    if paths.shape[0] == 0:
        return []
    key = paths[:, 0] * g.n_vars + paths[:, 4]
    order = np.argsort(key, kind="stable")
    paths, key = paths[order], key[order]
    bounds = np.flatnonzero(np.diff(key)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [key.size]])
    seen = set()
    for s, e in zip(starts, ends):
        if e - s < 2:
            continue
        grp = paths[s:e]
        for i in range(grp.shape[0]):
            for j in range(i + 1, grp.shape[0]):
                p, q = grp[i], grp[j]
                # v0 c0 v1 c1 v2, back along q: c1' v1' c0'
                seen.add(canonical_cycle((p[0], p[1], p[2], p[3], p[4], q[3], q[2], q[1])))
    cycles = [Cycle(c) for c in sorted(seen)]
    if budget is not None and len(cycles) > budget:
        log.info("8-cycle enumeration truncated to %d of %d", budget, len(cycles))
        cycles = cycles[:budget]
    return cycles


@dataclass(frozen=True)
class EtsCandidate:
    vars: frozenset[int]
    degrees: tuple[tuple[int, int], ...]  # (check, d_S(check)), sorted
    boundary: frozenset[int]
    stage: int
    cycles: tuple[int, ...]  # indices into the cycle list, in growth order

    @property
    def a(self) -> int:
        return len(self.vars)

    @property
    def b(self) -> int:
        return len(self.boundary)

    @property
    def type(self) -> tuple[int, int]:
        return (self.a, self.b)

    @property
    def is_ets(self) -> bool:
        return all(d in (1, 2) for _, d in self.degrees)

    def sort_key(self):
        return (self.b, self.a, tuple(sorted(self.vars)))


@dataclass
class GrowthResult:
    candidates: list[EtsCandidate]
    truncated: list[int] = field(default_factory=list)  # stages whose frontier was capped


def grow_ets(g: TannerGraph, cycles: Sequence[Cycle], max_stage: int = 5,
             stage_cap: int | None = None, keep=None) -> GrowthResult:
    """Breadth-first unions of overlapping 8-cycles satisfying the ETS degree rule.

    A cycle meeting the union only in a check raises that check's degree to
    at least 3, and degrees never drop as the union grows, so only cycles
    sharing a variable are tried.  Each stage's frontier is sorted by
    (b, a, vars) and cut to ``stage_cap``.  ``keep`` filters the returned list.
    """
    by_var: dict[int, list[int]] = defaultdict(list)
    for i, cyc in enumerate(cycles):
        for v in cyc.vars:
            by_var[v].append(i)
    nbrs: dict[int, list[int]] = {}

    def checks_of(v):
        if v not in nbrs:
            nbrs[v] = g.checks_of(v).tolist()
        return nbrs[v]

    def extend(deg, b, new_vars):
        deg = dict(deg)
        for u in new_vars:
            for c in checks_of(u):
                d = deg.get(c, 0) + 1
                if d > 2:
                    return None
                deg[c] = d
                b += 1 if d == 1 else -1
        return deg, b

    def trim(items, cap):
        uniq = {t[2]: t for t in items}
        items = sorted(uniq.values(), key=lambda t: t[:3])
        cut = cap is not None and len(items) > cap
        return (items[:cap] if cut else items), cut

    kept: set[frozenset[int]] = set()
    frontier = []  # (b, a, sorted vars, S, degrees, cycle path)
    for i, cyc in enumerate(cycles):
        S = frozenset(cyc.vars)
        r = extend({}, 0, sorted(S))
        if r is not None:
            frontier.append((r[1], len(S), tuple(sorted(S)), S, r[0], (i,)))
    out: list[EtsCandidate] = []
    truncated: list[int] = []
    stage = 1
    while True:
        frontier, cut = trim(frontier, stage_cap)
        if cut and stage not in truncated:
            truncated.append(stage)
        for b, a, _, S, deg, path in frontier:
            kept.add(S)
            bnd = frozenset(c for c, d in deg.items() if d == 1)
            out.append(EtsCandidate(S, tuple(sorted(deg.items())), bnd, stage, path))
        if stage >= max_stage or not frontier:
            break
        stage += 1
        nxt = []
        for b, a, _, S, deg, path in frontier:
            for j in sorted({j for v in S for j in by_var[v]}):
                new_vars = [u for u in cycles[j].vars if u not in S]
                if not new_vars:
                    continue
                S2 = S.union(new_vars)
                if S2 in kept:
                    continue
                r = extend(deg, b, new_vars)
                if r is not None:
                    nxt.append((r[1], len(S2), tuple(sorted(S2)), S2, r[0], path + (j,)))
            if stage_cap is not None and len(nxt) > 2 * stage_cap:
                nxt, _ = trim(nxt, stage_cap)
                if stage not in truncated:
                    truncated.append(stage)
        frontier = nxt
    if keep is not None:
        out = [c for c in out if keep(c)]
    return GrowthResult(out, truncated)


def ets_vectors(candidates: Sequence[EtsCandidate], n: int, pair_cap: int = 64):
    """Kernel vectors from (a,0) sets and from boundary-matched (a,2) pairs.

    Yields ``(support, params)`` with sorted supports.
    """
    pairs: dict[frozenset[int], list[EtsCandidate]] = defaultdict(list)
    for c in candidates:
        if c.b == 0:
            yield tuple(sorted(c.vars)), {"stage": c.stage, "type": [c.a, 0]}
        elif c.b == 2:
            pairs[c.boundary].append(c)
    for key in sorted(pairs, key=lambda k: tuple(sorted(k))):
        group = pairs[key]
        emitted = 0
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                if emitted >= pair_cap:
                    break
                diff = group[i].vars ^ group[j].vars
                if not diff:
                    continue
                emitted += 1
                yield tuple(sorted(diff)), {
                    "stage": max(group[i].stage, group[j].stage),
                    "pair": [[group[i].a, 2], [group[j].a, 2]],
                }


def ets_witnesses(code: CssCode, side: str, max_stage: int | None = None,
                  config=None) -> list[tuple[Witness, Certificate]]:
    """Certified ETS witnesses; X-side witnesses live in the H_Z graph."""
    cfg = section(config, "ets")
    if max_stage is None:
        max_stage = int(cfg["max_stage"])
    g = TannerGraph(code.check(side))
    cycles = enumerate_8cycles(g, cfg["cycle_budget"])
    res = grow_ets(g, cycles, max_stage, cfg["stage_cap"])
    best: dict[tuple[int, ...], dict] = {}
    for supp, params in ets_vectors(res.candidates, code.n, int(cfg["pair_cap"])):
        if supp not in best or params["stage"] < best[supp]["stage"]:
            best[supp] = params
    out = []
    for supp in sorted(best, key=lambda s: (len(s), best[s]["stage"], s)):
        v = Gf2Vector.from_support(code.n, supp)
        cert = certify(code, side, v)
        if cert.accepted:
            out.append((Witness(code.id, side, "ets", supp, best[supp]), cert))
    return out
