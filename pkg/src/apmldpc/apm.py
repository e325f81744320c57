"""Affine permutation matrices and the APM-LDPC parent/active/latent template."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .gf2 import Gf2Matrix, mat_mul

log = logging.getLogger(__name__)


class ConstructionError(ValueError):
    """Raised when affine data does not yield an orthogonal active pair."""


@dataclass(frozen=True)
class AffineMap:
    """The permutation ``x -> a*x + b (mod modulus)``.

    Template blocks use the matrix with row ``t`` holding its single one at
    column ``a t + b`` (see :func:`perm_matrix_dense`).
    """

    a: int
    b: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        object.__setattr__(self, "a", self.a % self.modulus)
        object.__setattr__(self, "b", self.b % self.modulus)
        if math.gcd(self.a, self.modulus) != 1:
            raise ValueError(f"{self.a} is not invertible mod {self.modulus}")

    @classmethod
    def identity(cls, modulus: int) -> "AffineMap":
        return cls(1, 0, modulus)

    def __call__(self, x):
        return (self.a * x + self.b) % self.modulus

    def perm(self) -> np.ndarray:
        return (self.a * np.arange(self.modulus, dtype=np.int64) + self.b) % self.modulus

    def reduce(self, q: int) -> "AffineMap":
        if self.modulus % q:
            raise ValueError(f"{q} does not divide {self.modulus}")
        return AffineMap(self.a % q, self.b % q, q)

    def __str__(self) -> str:
        return f"{self.a}x+{self.b}"


def affine_compose(f: AffineMap, g: AffineMap) -> AffineMap:
    """``f o g``, i.e. ``x -> f(g(x))``.

    With the row convention of :func:`perm_matrix_dense` this is the matrix
    product ``P_g @ P_f``; for the transposed (column) convention it is
    ``M_f @ M_g``.
    """
    if f.modulus != g.modulus:
        raise ValueError("modulus mismatch")
    return AffineMap(f.a * g.a, f.a * g.b + f.b, f.modulus)


def affine_transpose(f: AffineMap) -> AffineMap:
    """Inverse map; its permutation matrix is the transpose of ``M_f``."""
    inv = pow(f.a, -1, f.modulus)
    return AffineMap(inv, -inv * f.b, f.modulus)


def perm_matrix_dense(f: AffineMap) -> np.ndarray:
    """Row ``t`` has its one at column ``f(t)``, so ``(P u)_t = u_{f(t)}``."""
    m = np.zeros((f.modulus, f.modulus), dtype=np.uint8)
    t = np.arange(f.modulus)
    m[t, f.perm()] = 1
    return m


@dataclass(frozen=True)
class CodeSpec:
    id: str
    P: int
    J: int
    L: int
    f: tuple[AffineMap, ...]
    g: tuple[AffineMap, ...]

    def __post_init__(self):
        if self.L % 2:
            raise ValueError("L must be even")
        half = self.L // 2
        if not 1 <= self.J <= half:
            raise ValueError("need 1 <= J <= L/2")
        if len(self.f) != half or len(self.g) != half:
            raise ValueError(f"need {half} f maps and {half} g maps")
        if any(m.modulus != self.P for m in self.f + self.g):
            raise ValueError("all maps must use modulus P")

    @classmethod
    def from_pairs(cls, id: str, P: int, J: int, L: int, f, g) -> "CodeSpec":
        return cls(id, P, J, L,
                   tuple(AffineMap(a, b, P) for a, b in f),
                   tuple(AffineMap(a, b, P) for a, b in g))

    @property
    def half(self) -> int:
        return self.L // 2

    @property
    def n(self) -> int:
        return self.L * self.P

    @property
    def latent_blocks(self) -> int:
        return self.half - self.J

    def reduce(self, q: int) -> "CodeSpec":
        """Same template with every map reduced modulo ``q`` (``q | P``)."""
        return CodeSpec(f"{self.id}/mod{q}", q, self.J, self.L,
                        tuple(m.reduce(q) for m in self.f),
                        tuple(m.reduce(q) for m in self.g))

    def with_map(self, which: str, index: int, new: AffineMap) -> "CodeSpec":
        maps = list(getattr(self, which))
        maps[index] = new
        kw = {"f": self.f, "g": self.g, which: tuple(maps)}
        return CodeSpec(self.id, self.P, self.J, self.L, kw["f"], kw["g"])


def delta(J: int, L: int) -> frozenset[int]:
    half = L // 2
    return frozenset((k - i) % half for i in range(J) for k in range(J))


def _parent_dense(spec: CodeSpec) -> tuple[np.ndarray, np.ndarray]:
    P, half = spec.P, spec.half
    n = spec.n
    hx = np.zeros((half * P, n), dtype=np.uint8)
    hz = np.zeros((half * P, n), dtype=np.uint8)
    t = np.arange(P)
    for i in range(half):
        rows = i * P
        for j in range(half):
            # X blocks: row t -> column map(t)
            fx = spec.f[(j - i) % half]
            gx = spec.g[(j - i) % half]
            hx[rows + t, j * P + fx.perm()] = 1
            hx[rows + t, (half + j) * P + gx.perm()] = 1
            # Z blocks are transposes: row map(t) -> column t
            gz = spec.g[(i - j) % half]
            fz = spec.f[(i - j) % half]
            hz[rows + gz.perm(), j * P + t] = 1
            hz[rows + fz.perm(), (half + j) * P + t] = 1
    return hx, hz


def parent_matrices(spec: CodeSpec) -> tuple[Gf2Matrix, Gf2Matrix]:
    hx, hz = _parent_dense(spec)
    return Gf2Matrix.from_dense(hx), Gf2Matrix.from_dense(hz)


def active_matrices(spec: CodeSpec) -> tuple[Gf2Matrix, Gf2Matrix]:
    hx, hz = _parent_dense(spec)
    cut = spec.J * spec.P
    return Gf2Matrix.from_dense(hx[:cut]), Gf2Matrix.from_dense(hz[:cut])


def psi(spec: CodeSpec, r: int) -> Gf2Matrix:
    """Dense parity sum of the ``2 * L/2`` composed permutations for residue ``r``."""
    half, P = spec.half, spec.P
    if not 0 <= r < half:
        raise ValueError(f"residue {r} outside [0, {half})")
    acc = np.zeros((P, P), dtype=np.uint8)
    t = np.arange(P)
    for u in range(half):
        fu, gv = spec.f[u], spec.g[(r - u) % half]
        # P_fu P_gv = P_(gv o fu) in the row convention
        for h in (affine_compose(gv, fu), affine_compose(fu, gv)):
            acc[t, h.perm()] ^= 1
    return Gf2Matrix.from_dense(acc)


@dataclass
class OrthogonalityReport:
    delta: frozenset[int]
    nonzero: dict[int, bool]
    ranks: dict[int, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not any(self.nonzero[r] for r in self.delta)

    @property
    def failing(self) -> list[int]:
        return sorted(r for r in self.delta if self.nonzero[r])

    @property
    def unconstrained(self) -> list[int]:
        return sorted(r for r in self.nonzero if r not in self.delta)

    def summary(self) -> str:
        parts = []
        for r in sorted(self.nonzero):
            tag = "active" if r in self.delta else "free"
            state = "nonzero" if self.nonzero[r] else "zero"
            parts.append(f"Psi_{r}[{tag}]={state}")
        return ", ".join(parts)


def check_active_orthogonality(spec: CodeSpec, with_ranks: bool = False) -> OrthogonalityReport:
    d = delta(spec.J, spec.L)
    nonzero: dict[int, bool] = {}
    ranks: dict[int, int] = {}
    for r in range(spec.half):
        m = psi(spec, r)
        nonzero[r] = not m.is_zero()
        if with_ranks:
            ranks[r] = m.rank
    return OrthogonalityReport(d, nonzero, ranks)


def _bipartite_adjacency(h: Gf2Matrix) -> sp.csr_matrix:
    dense = h.to_dense()
    rows, cols = np.nonzero(dense)
    m, n = h.shape
    size = m + n
    data = np.ones(2 * rows.size, dtype=np.int64)
    ii = np.concatenate([rows, m + cols])
    jj = np.concatenate([m + cols, rows])
    return sp.csr_matrix((data, (ii, jj)), shape=(size, size))


def girth(h: Gf2Matrix, max_length: int | None = None, batch: int = 1024) -> float:
    """Exact length of the shortest cycle in the Tanner graph of ``h``.

    Counts non-backtracking walks from every variable node; the first length
    ``d`` at which two distinct walks reach the same node gives girth ``2d``.
    Returns ``math.inf`` for a forest (or when no cycle is at most
    ``max_length``, if given).
    """
    if h.is_zero():
        raise ValueError("girth of an empty Tanner graph")
    m, n = h.shape
    adj = _bipartite_adjacency(h)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    size = m + n
    d_minus = sp.diags(deg - 1, format="csr")
    best = math.inf
    limit = max_length // 2 if max_length else size
    for start in range(0, n, batch):
        roots = np.arange(m + start, m + min(n, start + batch))
        k = roots.size
        eye = sp.csr_matrix((np.ones(k, dtype=np.int64), (np.arange(k), roots)), shape=(k, size))
        w_prev2 = eye
        w_prev = adj[roots]
        d = 1
        while True:
            d += 1
            if 2 * d >= best or d > limit:
                break
            if d == 2:
                w = w_prev @ adj - eye.multiply(deg[roots][:, None]).tocsr()
            else:
                w = w_prev @ adj - w_prev2 @ d_minus
            w.eliminate_zeros()
            if w.nnz == 0:
                break
            if w.max() >= 2:
                best = min(best, 2 * d)
                break
            w_prev2, w_prev = w_prev, w
    return best


@dataclass
class CssCode:
    spec: CodeSpec
    H_X: Gf2Matrix
    H_Z: Gf2Matrix
    Ht_X: Gf2Matrix
    Ht_Z: Gf2Matrix
    orthogonality: OrthogonalityReport

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def n(self) -> int:
        return self.spec.n

    @cached_property
    def rank_x(self) -> int:
        return self.H_X.rank

    @cached_property
    def rank_z(self) -> int:
        return self.H_Z.rank

    @property
    def k(self) -> int:
        return self.n - self.rank_x - self.rank_z

    @cached_property
    def girth_x(self) -> float:
        return girth(self.H_X)

    @cached_property
    def girth_z(self) -> float:
        return girth(self.H_Z)

    @property
    def girth_warning(self) -> bool:
        return min(self.girth_x, self.girth_z) < 8

    def active(self, side: str) -> Gf2Matrix:
        """Stabilizer matrix of ``side`` (``H_X`` for X)."""
        return self.H_X if side == "X" else self.H_Z

    def check(self, side: str) -> Gf2Matrix:
        """Matrix whose kernel holds ``side`` logicals (``H_Z`` for X)."""
        return self.H_Z if side == "X" else self.H_X

    def latent(self, side: str) -> Gf2Matrix:
        return self.Ht_X if side == "X" else self.Ht_Z

    def parameters(self) -> str:
        return f"[[n={self.n}, k={self.k}]]"


def build_code(spec: CodeSpec, compute_girth: bool = True, require_orthogonal: bool = True) -> CssCode:
    report = check_active_orthogonality(spec)
    if require_orthogonal and not report.passed:
        raise ConstructionError(
            f"{spec.id}: active orthogonality fails, Psi_r != 0 for r in {report.failing}")
    hx, hz = _parent_dense(spec)
    cut = spec.J * spec.P
    code = CssCode(
        spec=spec,
        H_X=Gf2Matrix.from_dense(hx[:cut]),
        H_Z=Gf2Matrix.from_dense(hz[:cut]),
        Ht_X=Gf2Matrix.from_dense(hx[cut:]),
        Ht_Z=Gf2Matrix.from_dense(hz[cut:]),
        orthogonality=report,
    )
    code.rank_x, code.rank_z  # noqa: B018 - populate caches
    if compute_girth and code.girth_warning:
        log.warning("%s: active girth (%s, %s) below 8", spec.id, code.girth_x, code.girth_z)
    return code


def check_product_zero(code: CssCode) -> bool:
    return mat_mul(code.H_X, code.H_Z.transpose()).is_zero()
