"""Exact latent certification at block factor m.

If every kernel vector of the mixed product is m-block constant, every latent
logical is the lift of a vector in the compressed latent image, with weight
exactly m times the compressed weight.  Showing the compressed image has no
nonzero vector of weight below tau then gives the lower bound m * tau.
The exclusion is swept exhaustively for small dimensions; otherwise a DIMACS
CNF is written for an external solver and the result can be attested.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .apm import CssCode
from .config import section
from .gf2 import Gf2Matrix, Gf2Vector, kernel_matrix, mat_mul, vstack
from .latent import divisors, mixed_product, search_latent
from .lowweight import _span_table
from .restricted import BlockStructure

STATUSES = ("proved-exhaustive", "refuted", "cnf-exported", "attested-unsat", "inconclusive")
_LOW_BITS = 16


class ExactnessError(ValueError):
    pass


def build_Bm(P: int, m: int) -> Gf2Matrix:
    """Rows e_t + e_{t+jQ} for 1 <= j < m, 0 <= t < Q (j-major)."""
    Q = BlockStructure(P, m).Q
    rows = (m - 1) * Q
    dense = np.zeros((rows, P), dtype=np.uint8)
    r = np.arange(rows)
    j, t = np.divmod(r, Q)
    dense[r, t] = 1
    dense[r, t + (j + 1) * Q] = 1
    return Gf2Matrix.from_dense(dense)


def block_Bm(P: int, m: int, s: int) -> Gf2Matrix:
    """``I_s (x) B_m``."""
    b = build_Bm(P, m).to_dense()
    out = np.zeros((s * b.shape[0], s * P), dtype=np.uint8)
    for i in range(s):
        out[i * b.shape[0]:(i + 1) * b.shape[0], i * P:(i + 1) * P] = b
    return Gf2Matrix.from_dense(out)


def blockwise_constant(v, P: int, m: int) -> bool:
    d = v.to_dense() if isinstance(v, Gf2Vector) else np.asarray(v, dtype=np.uint8)
    r = d.reshape(-1, m, P // m)
    return bool((r == r[:, :1, :]).all())


def side_rank_test(code: CssCode, side: str, m: int) -> bool:
    BlockStructure(code.spec.P, m)
    M = mixed_product(code, side)
    B = block_Bm(code.spec.P, m, code.spec.latent_blocks)
    return vstack(M, B).rank == M.rank


def kernel_rank_test(code: CssCode, m: int) -> tuple[bool, bool]:
    """The two rank equalities ``rank([M; I_s (x) B_m]) == rank(M)`` for X and Z."""
    return side_rank_test(code, "X", m), side_rank_test(code, "Z", m)


def kernel_scan(code: CssCode, side: str, m: int) -> bool:
    """Direct check that every kernel basis vector of the mixed product is m-block constant."""
    K = kernel_matrix(mixed_product(code, side))
    return all(blockwise_constant(K.row(i), code.spec.P, m) for i in range(K.rows))


def pick_block_factor(code: CssCode) -> int | None:
    """Largest m > 1 dividing P with a passing rank test on some side."""
    for m in sorted(divisors(code.spec.P)[1:], reverse=True):
        if any(side_rank_test(code, side, m) for side in ("X", "Z")):
            return m
    return None


def latent_image(code: CssCode, side: str) -> Gf2Matrix:
    """Rows ``lam^T Ht`` for a kernel basis ``lam`` of the mixed product."""
    K = kernel_matrix(mixed_product(code, side))
    if K.rows == 0:
        return Gf2Matrix(0, code.n)
    return mat_mul(K, code.latent(side))


def independent_rows(m: Gf2Matrix) -> Gf2Matrix:
    """The earliest rows of ``m`` spanning its row space."""
    if m.rows == 0:
        return m
    return m.select_rows(m.transpose().profile().pivots)


def compressed_latent_basis(code: CssCode, side: str, m: int, check_rank: bool = True) -> Gf2Matrix:
    """Basis of the compressed latent image, rows of length ``L * Q``."""
    P = code.spec.P
    bs = BlockStructure(P, m)
    if code.spec.latent_blocks == 0:
        return Gf2Matrix(0, code.spec.L * bs.Q)
    if check_rank and not side_rank_test(code, side, m):
        raise ExactnessError(f"{code.id} side {side}: kernel is not {m}-block constant; compression undefined")
    img = latent_image(code, side)
    d = img.to_dense().reshape(img.rows, -1, m, bs.Q)
    if not (d == d[:, :, :1, :]).all():
        raise ExactnessError("latent image vector is not block constant")
    comp = Gf2Matrix.from_dense(d[:, :, 0, :].reshape(img.rows, -1))
    return independent_rows(comp)


# ----------------------------------------------------------------------
# exclusion


@dataclass
class Exclusion:
    status: str
    tau: int
    dim: int
    counterexample: Gf2Vector | None = None
    mask: int | None = None
    cnf_path: str | None = None
    cnf_hash: str | None = None


def exhaustive_min(basis: Gf2Matrix, tau: int) -> tuple[int, int] | None:
    """Least combination mask whose vector has weight in [1, tau), with that weight.

    Masks are swept in increasing integer order; low bits come from a table,
    high bits are the outer loop.
    """
    words = basis.words
    d = words.shape[0]
    lo = min(d, _LOW_BITS)
    table = _span_table(words[:lo])
    high = words[lo:]
    for h in range(1 << (d - lo)):
        acc = np.zeros(words.shape[1], dtype=np.uint64)
        for b in range(d - lo):
            if h >> b & 1:
                acc ^= high[b]
        w = np.bitwise_count(table ^ acc).sum(axis=1, dtype=np.int64)
        hit = np.flatnonzero((w > 0) & (w < tau))
        if hit.size:
            j = int(hit[0])
            return (h << lo) | j, int(w[j])
    return None


def exclude_below(basis: Gf2Matrix, tau: int, mode: str = "exhaustive", cap: int = 28,
                  cnf_path: str | Path | None = None, meta: dict | None = None) -> Exclusion:
    """Decide or export "no nonzero vector of the span has weight < tau"."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    d = basis.rows
    if mode == "exhaustive":
        if d > cap:
            raise ExactnessError(f"dimension {d} exceeds the exhaustive cap {cap}; use CNF export")
        if d == 0:
            return Exclusion("proved-exhaustive", tau, d)
        hit = exhaustive_min(basis, tau)
        if hit is None:
            return Exclusion("proved-exhaustive", tau, d)
        mask, _ = hit
        idx = [b for b in range(d) if mask >> b & 1]
        v = Gf2Vector(basis.cols, np.bitwise_xor.reduce(basis.words[idx], axis=0))
        return Exclusion("refuted", tau, d, counterexample=v, mask=mask)
    if mode == "cnf-export":
        text = encode_cnf(basis, tau, meta)
        digest = cnf_digest(text)
        if cnf_path is not None:
            Path(cnf_path).write_text(text)
        return Exclusion("cnf-exported", tau, d, cnf_path=str(cnf_path) if cnf_path else None,
                         cnf_hash=digest)
    raise ValueError(f"unknown exclusion mode {mode!r}")


# ----------------------------------------------------------------------
# CNF


@dataclass
class Cnf:
    n_vars: int
    clauses: list[tuple[int, ...]] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)

    def new_var(self) -> int:
        self.n_vars += 1
        return self.n_vars

    def add(self, *lits: int) -> None:
        self.clauses.append(tuple(lits))


def _xor3(cnf: Cnf, z: int, a: int, b: int) -> None:
    """z <-> a xor b."""
    cnf.add(-z, a, b)
    cnf.add(-z, -a, -b)
    cnf.add(z, -a, b)
    cnf.add(z, a, -b)


def _at_most(cnf: Cnf, xs: list[int], k: int) -> None:
    """Sequential counter: at most ``k`` of ``xs`` are true."""
    n = len(xs)
    if k >= n:
        return
    if k == 0:
        for x in xs:
            cnf.add(-x)
        return
    s = [[cnf.new_var() for _ in range(k)] for _ in range(n - 1)]
    cnf.add(-xs[0], s[0][0])
    for j in range(1, k):
        cnf.add(-s[0][j])
    for i in range(1, n - 1):
        cnf.add(-xs[i], s[i][0])
        cnf.add(-s[i - 1][0], s[i][0])
        for j in range(1, k):
            cnf.add(-xs[i], -s[i - 1][j - 1], s[i][j])
            cnf.add(-s[i - 1][j], s[i][j])
        cnf.add(-xs[i], -s[i - 1][k - 1])
    cnf.add(-xs[n - 1], -s[n - 2][k - 1])


def build_cnf(basis: Gf2Matrix, tau: int) -> Cnf:
    """Variables: 1..N vector bits, then d combination bits, counter auxiliaries, XOR auxiliaries.

    Clauses say x = sum_j c_j b_j, x != 0 and wt(x) <= tau - 1.
    """
    N, d = basis.cols, basis.rows
    cnf = Cnf(N + d)
    xs = list(range(1, N + 1))
    cs = list(range(N + 1, N + d + 1))
    cnf.add(*xs)
    _at_most(cnf, xs, tau - 1)
    dense = basis.to_dense()
    for i in range(N):
        rows = [cs[j] for j in np.flatnonzero(dense[:, i])]
        x = xs[i]
        if not rows:
            cnf.add(-x)
        elif len(rows) == 1:
            cnf.add(-x, rows[0])
            cnf.add(x, -rows[0])
        else:
            acc = rows[0]
            for r in rows[1:-1]:
                z = cnf.new_var()
                _xor3(cnf, z, acc, r)
                acc = z
            _xor3(cnf, x, acc, rows[-1])
    return cnf


def _body(cnf: Cnf) -> str:
    lines = [f"p cnf {cnf.n_vars} {len(cnf.clauses)}"]
    lines.extend(" ".join(map(str, c)) + " 0" for c in cnf.clauses)
    return "\n".join(lines) + "\n"


def cnf_digest(text: str) -> str:
    """sha256 of everything after the comment header."""
    body = "".join(line for line in text.splitlines(keepends=True) if not line.startswith("c "))
    return hashlib.sha256(body.encode()).hexdigest()


def encode_cnf(basis: Gf2Matrix, tau: int, meta: dict | None = None) -> str:
    cnf = build_cnf(basis, tau)
    body = _body(cnf)
    N, d = basis.cols, basis.rows
    meta = dict(meta or {})
    head = [f"c {k} {meta[k]}" for k in ("code", "side", "m") if k in meta]
    head += [
        f"c tau {tau}",
        f"c dim {d}",
        f"c vars 1..{N} vector bits; {N + 1}..{N + d} combination bits; "
        f"{N + d + 1}..{cnf.n_vars} counter then xor auxiliaries",
        f"c encodes x = sum c_j b_j, x != 0, wt(x) <= {tau - 1} (sequential counter)",
        f"c sha256 {hashlib.sha256(body.encode()).hexdigest()}",
    ]
    return "\n".join(head) + "\n" + body


def parse_dimacs(text: str) -> Cnf:
    n_vars = 0
    clauses = []
    for line in text.splitlines():
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            n_vars = int(line.split()[2])
            continue
        lits = [int(t) for t in line.split()]
        if lits[-1] != 0:
            raise ValueError(f"clause not terminated: {line!r}")
        clauses.append(tuple(lits[:-1]))
    return Cnf(n_vars, clauses)


def unit_propagate(cnf: Cnf, assumptions=()) -> dict[int, bool] | None:
    """Assignment closed under unit propagation, or None on a conflict."""
    val: dict[int, bool] = {}
    for lit in assumptions:
        if val.get(abs(lit), lit > 0) != (lit > 0):
            return None
        val[abs(lit)] = lit > 0
    changed = True
    while changed:
        changed = False
        for cl in cnf.clauses:
            free = []
            sat = False
            for lit in cl:
                v = val.get(abs(lit))
                if v is None:
                    free.append(lit)
                elif v == (lit > 0):
                    sat = True
                    break
            if sat:
                continue
            if not free:
                return None
            if len(free) == 1:
                val[abs(free[0])] = free[0] > 0
                changed = True
    return val


def solve_small(cnf: Cnf, assumptions=()) -> dict[int, bool] | None:
    """DPLL for tiny instances; returns a model or None if unsatisfiable."""
    val = unit_propagate(cnf, assumptions)
    if val is None:
        return None
    for v in range(1, cnf.n_vars + 1):
        if v not in val:
            for lit in (v, -v):
                model = solve_small(cnf, list(assumptions) + [lit])
                if model is not None:
                    return model
            return None
    return val


# ----------------------------------------------------------------------
# attestation


def write_attestation(path: str | Path, cnf_hash: str, solver_name: str) -> None:
    Path(path).write_text(json.dumps({"cnf_hash": cnf_hash, "solver_name": solver_name,
                                      "result": "UNSAT"}, sort_keys=True) + "\n")


def read_attestation(path: str | Path, cnf_hash: str) -> bool:
    """True when the file attests UNSAT for exactly this CNF."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return False
    return data.get("result") == "UNSAT" and data.get("cnf_hash") == cnf_hash and bool(data.get("solver_name"))


# ----------------------------------------------------------------------
# orchestration


@dataclass
class ExactnessVerdict:
    code_id: str
    side: str
    m: int
    rank_pass: bool
    dim: int | None = None
    status: str = "inconclusive"
    tau: int | None = None
    witness_weight: int | None = None
    counterexample_weight: int | None = None
    cnf_path: str | None = None
    cnf_hash: str | None = None

    @property
    def lower_bound(self) -> int | None:
        """m * tau, only once exclusion is proved or attested."""
        if self.rank_pass and self.tau is not None and self.status in ("proved-exhaustive", "attested-unsat"):
            return self.m * self.tau
        return None

    @property
    def exact(self) -> int | None:
        lb = self.lower_bound
        return lb if lb is not None and self.witness_weight == lb else None

    @property
    def statement(self) -> str:
        if not self.rank_pass:
            return "none"
        if self.exact is not None:
            return f"exact latent distance {self.exact}"
        if self.lower_bound is not None:
            return f"latent distance >= {self.lower_bound}"
        if self.status == "cnf-exported" and self.tau is not None:
            return f"latent distance >= {self.m * self.tau} pending UNSAT attestation"
        return "none"

    def to_dict(self) -> dict:
        return {
            "code": self.code_id, "side": self.side, "m": self.m, "rank_pass": self.rank_pass,
            "dim": self.dim, "status": self.status, "tau": self.tau,
            "witness_weight": self.witness_weight, "lower_bound": self.lower_bound,
            "exact": self.exact, "counterexample_weight": self.counterexample_weight,
            "cnf_hash": self.cnf_hash, "statement": self.statement,
        }


def exact_latent(code: CssCode, m: int | None = None, tau: int | None = None, config=None,
                 sides=("X", "Z"), out_dir: str | Path | None = None,
                 attestations: dict | None = None, witnesses: dict | None = None) -> dict[str, ExactnessVerdict]:
    """Rank test, compressed basis and exclusion per side.

    ``tau`` defaults to the best certified latent weight divided by ``m``.
    ``witnesses`` may map a side to a known latent weight to skip the search;
    ``attestations`` maps a side to an attestation file path.
    """
    cfg = section(config, "exact")
    m = int(m if m is not None else cfg["m"] or 0)
    if m <= 0:
        raise ValueError("block factor m is required")
    tau = tau if tau is not None else cfg["tau"]
    cap = int(cfg["cap"])
    BlockStructure(code.spec.P, m)
    out = {}
    for side in sides:
        v = ExactnessVerdict(code.id, side, m, side_rank_test(code, side, m))
        if witnesses and side in witnesses:
            v.witness_weight = witnesses[side]
        else:
            found = search_latent(code, side, config)
            v.witness_weight = found[0][0].weight if found else None
        if not v.rank_pass:
            out[side] = v
            continue
        t = tau
        if t is None and v.witness_weight is not None and v.witness_weight % m == 0:
            t = v.witness_weight // m
        basis = compressed_latent_basis(code, side, m, check_rank=False)
        v.dim = basis.rows
        if t is None:
            out[side] = v
            continue
        v.tau = int(t)
        if basis.rows <= cap:
            ex = exclude_below(basis, v.tau, "exhaustive", cap)
            if ex.counterexample is not None:
                v.counterexample_weight = ex.counterexample.weight
        else:
            path = Path(out_dir) / f"{code.id}_{side}_m{m}_tau{v.tau}.cnf" if out_dir else None
            ex = exclude_below(basis, v.tau, "cnf-export", cnf_path=path,
                               meta={"code": code.id, "side": side, "m": m})
            v.cnf_path, v.cnf_hash = ex.cnf_path, ex.cnf_hash
            att = (attestations or {}).get(side)
            if att is not None and read_attestation(att, ex.cnf_hash):
                ex.status = "attested-unsat"
        v.status = ex.status
        out[side] = v
    return out


def brute_latent_minimum(code: CssCode, side: str) -> int | None:
    """Minimum weight of a non-stabilizer latent lift, by enumerating the kernel (tiny codes only)."""
    K = kernel_matrix(mixed_product(code, side))
    if K.rows == 0:
        return None
    if K.rows > 22:
        raise ValueError("kernel too large for brute force")
    img = mat_mul(K, code.latent(side))
    prof = code.active(side).profile()
    best = None
    for mask in range(1, 1 << K.rows):
        idx = [b for b in range(K.rows) if mask >> b & 1]
        v = Gf2Vector(code.n, np.bitwise_xor.reduce(img.words[idx], axis=0))
        if v.is_zero() or prof.reduce(v).is_zero():
            continue
        if best is None or v.weight < best:
            best = v.weight
    return best
