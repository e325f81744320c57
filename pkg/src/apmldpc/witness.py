"""Certification of logical representatives and the per-code bound ledger.

An X-side witness is a vector ``x`` with ``H_Z x^T = 0`` and ``x`` outside
``Row(H_X)``; its weight bounds ``d_X`` from above.  Z is the mirror image.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping


from .apm import CssCode
from .gf2 import Gf2Vector, in_row_space, syndrome_dense

METHODS = ("lat", "blk", "fib", "crt", "dir", "ets", "dec")
SIDES = ("X", "Z")
DASH_METHODS = frozenset({"ets", "dec"})


def _check_side(side: str) -> str:
    if side not in SIDES:
        raise ValueError(f"side must be X or Z, got {side!r}")
    return side


@dataclass(frozen=True)
class Witness:
    code_id: str
    side: str
    method: str
    support: tuple[int, ...]
    method_params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        _check_side(self.side)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        supp = tuple(int(i) for i in self.support)
        if any(b <= a for a, b in zip(supp, supp[1:])):
            raise ValueError("support must be strictly increasing")
        if supp and supp[0] < 0:
            raise ValueError("negative support index")
        object.__setattr__(self, "support", supp)

    @property
    def weight(self) -> int:
        return len(self.support)

    @classmethod
    def from_vector(cls, code_id: str, side: str, method: str, v: Gf2Vector, **params) -> "Witness":
        return cls(code_id, side, method, tuple(v.support().tolist()), dict(params))

    def vector(self, n: int) -> Gf2Vector:
        if self.support and self.support[-1] >= n:
            raise ValueError(f"support index {self.support[-1]} out of range for length {n}")
        return Gf2Vector.from_support(n, self.support)

    def coords(self, block: int) -> list[tuple[int, int]]:
        return [divmod(i, block) for i in self.support]


@dataclass(frozen=True)
class Certificate:
    kernel_ok: bool
    non_stabilizer: bool
    non_latent: bool | None
    rank_base: int
    rank_aug: int

    @property
    def accepted(self) -> bool:
        return self.kernel_ok and self.non_stabilizer

    @property
    def verdict(self) -> str:
        return "accepted" if self.accepted else "rejected"

    def to_dict(self) -> dict:
        return asdict(self)


def certify(code: CssCode, side: str, v: Gf2Vector, with_latent: bool = True) -> Certificate:
    """Kernel test against the opposite checks, row-space exclusion on this side."""
    _check_side(side)
    if v.n != code.n:
        raise ValueError(f"vector length {v.n} != code length {code.n}")
    if v.is_zero():
        raise ValueError("zero vector cannot be a witness")
    kernel_ok = not syndrome_dense(code.check(side), v).any()
    prof = code.active(side).profile()
    non_stab = not in_row_space(prof, v)
    non_latent = None
    if with_latent and code.latent(side).rows:
        non_latent = not in_row_space(code.latent(side), v)
    return Certificate(kernel_ok, non_stab, non_latent, prof.rank, prof.rank + int(non_stab))


def classify_latent(code: CssCode, side: str, v: Gf2Vector) -> bool:
    """True when ``v`` lies in the latent row space of ``side``."""
    _check_side(side)
    lat = code.latent(side)
    if lat.rows == 0:
        return v.is_zero()
    return in_row_space(lat, v)


# ledger


@dataclass(frozen=True)
class Entry:
    witness: Witness
    certificate: Certificate
    seq: int

    @property
    def weight(self) -> int:
        return self.witness.weight

    @property
    def stage(self) -> int | None:
        s = self.witness.method_params.get("stage")
        return None if s is None else int(s)


class RejectedWitness(ValueError):
    pass


class BoundLedger:
    """Best certified weight per (code, side, method)."""

    def __init__(self):
        self._best: dict[tuple[str, str, str], Entry] = {}
        self.history: list[Entry] = []

    def register(self, witness: Witness, certificate: Certificate) -> bool:
        """Record an accepted witness; returns True when the entry improved."""
        if not certificate.accepted:
            raise RejectedWitness(
                f"{witness.code_id}/{witness.side}/{witness.method}: certificate rejected")
        entry = Entry(witness, certificate, len(self.history))
        self.history.append(entry)
        key = (witness.code_id, witness.side, witness.method)
        cur = self._best.get(key)
        if cur is None or entry.weight < cur.weight:
            self._best[key] = entry
            return True
        return False

    def register_many(self, pairs: Iterable[tuple[Witness, Certificate]]) -> int:
        """Serialized registration ordered by (weight, submission order); skips rejected."""
        indexed = [(w.weight, i, w, c) for i, (w, c) in enumerate(pairs) if c.accepted]
        indexed.sort(key=lambda r: (r[0], r[1]))
        return sum(self.register(w, c) for _, _, w, c in indexed)

    def get(self, code_id: str, side: str, method: str) -> Entry | None:
        return self._best.get((code_id, side, method))

    def entries(self) -> list[Entry]:
        return [self._best[k] for k in sorted(self._best)]

    def code_ids(self) -> list[str]:
        return sorted({k[0] for k in self._best}, key=_natural_key)

    def code_min(self, code_id: str) -> int | None:
        ws = [e.weight for k, e in self._best.items() if k[0] == code_id]
        return min(ws) if ws else None

    def side_min(self, code_id: str, side: str) -> int | None:
        ws = [e.weight for k, e in self._best.items() if k[:2] == (code_id, side)]
        return min(ws) if ws else None

    def __len__(self) -> int:
        return len(self._best)


def _natural_key(code_id: str):
    head = code_id.rstrip("0123456789")
    tail = code_id[len(head):]
    return (head, int(tail) if tail else -1, code_id)


# witness store (JSON lines)


def witness_record(w: Witness, cert: Certificate | None = None, block: int | None = None) -> dict:
    rec: dict = {
        "code_id": w.code_id,
        "side": w.side,
        "method": w.method,
        "method_params": w.method_params,
        "weight": w.weight,
    }
    if block:
        rec["block"] = block
        rec["coords"] = [list(ct) for ct in w.coords(block)]
    else:
        rec["support"] = list(w.support)
    if cert is not None:
        rec["cert"] = cert.to_dict()
    return rec


def parse_record(rec: Mapping) -> tuple[Witness, Certificate | None]:
    if "support" in rec:
        support = sorted(int(i) for i in rec["support"])
    elif "coords" in rec:
        block = int(rec["block"])
        support = sorted(int(c) * block + int(t) for c, t in rec["coords"])
    else:
        raise ValueError("record has neither 'support' nor 'coords'")
    w = Witness(rec["code_id"], rec["side"], rec["method"], tuple(support), dict(rec.get("method_params", {})))
    if "weight" in rec and int(rec["weight"]) != w.weight:
        raise ValueError(f"declared weight {rec['weight']} != support size {w.weight}")
    cert = Certificate(**rec["cert"]) if rec.get("cert") else None
    return w, cert


def dumps_store(records: Iterable[tuple[Witness, Certificate | None]]) -> str:
    lines = [json.dumps(witness_record(w, c), sort_keys=True, separators=(",", ":")) for w, c in records]
    return "".join(line + "\n" for line in lines)


def write_store(path: str | Path, records: Iterable[tuple[Witness, Certificate | None]]) -> None:
    Path(path).write_text(dumps_store(records))


def iter_store(text: str, source: str = "<store>") -> Iterator[tuple[Witness, Certificate | None]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            yield parse_record(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None


def read_store(path: str | Path) -> list[tuple[Witness, Certificate | None]]:
    path = Path(path)
    return list(iter_store(path.read_text(), str(path)))


def ledger_store(ledger: BoundLedger) -> list[tuple[Witness, Certificate]]:
    """Best entries in canonical order, for deterministic output."""
    return [(e.witness, e.certificate) for e in ledger.entries()]


def load_fixtures() -> list[tuple[Witness, Certificate | None]]:
    text = resources.files("apmldpc").joinpath("data/fixtures.jsonl").read_text()
    return list(iter_store(text, "fixtures.jsonl"))


# report


@dataclass
class TableRow:
    code_id: str
    P: int | None
    n: int | None
    k: int | None
    side: str
    cells: dict[str, tuple[int, int | None] | None]  # method -> (weight, stage)
    d_bound: int | None = None


def ledger_rows(ledger: BoundLedger, params: Mapping[str, tuple[int, int, int]] | None = None,
                code_ids: Iterable[str] | None = None) -> list[TableRow]:
    """Rows for every code in ``code_ids`` (default: ledger codes then ``params`` codes).

    ``params`` maps code id to ``(P, n, k)``.
    """
    params = dict(params or {})
    if code_ids is None:
        code_ids = sorted(set(ledger.code_ids()) | set(params), key=_natural_key)
    rows = []
    for cid in code_ids:
        P, n, k = params.get(cid, (None, None, None))
        dmin = ledger.code_min(cid)
        for side in SIDES:
            cells = {}
            for m in METHODS:
                e = ledger.get(cid, side, m)
                cells[m] = None if e is None else (e.weight, e.stage)
            rows.append(TableRow(cid, P, n, k, side, cells, dmin))
    return rows


def parameter_string(n: int | None, k: int | None, d: int | None) -> str:
    parts = []
    if n is not None:
        parts.append(f"n={n}")
    if k is not None:
        parts.append(f"k={k}")
    if d is not None:
        parts.append(f"d<={d}")
    return "[[" + ", ".join(parts) + "]]"


def format_cell(method: str, cell: tuple[int, int | None] | None, best: int | None) -> str:
    if cell is None:
        return "--" if method in DASH_METHODS else ""
    w, stage = cell
    text = f"{w}^[{stage}]" if method == "ets" and stage is not None else str(w)
    if best is not None and w == best:
        text += "*"
    return text


def render_text(rows: list[TableRow]) -> str:
    header = ["Code", "P", "Parameters", "side", *METHODS]
    table = [header]
    for r in rows:
        first = r.side == "X"
        table.append([
            r.code_id if first else "",
            (str(r.P) if r.P is not None else "") if first else "",
            parameter_string(r.n, r.k, r.d_bound) if first else "",
            r.side,
            *(format_cell(m, r.cells[m], r.d_bound) for m in METHODS),
        ])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    out = []
    for row in table:
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


def render_csv(rows: list[TableRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["code_id", "P", "n", "k", "d_bound", "side", *METHODS, "ets_stage"])
    for r in rows:
        vals = ["" if r.cells[m] is None else r.cells[m][0] for m in METHODS]
        ets = r.cells["ets"]
        stage = "" if ets is None or ets[1] is None else ets[1]
        wr.writerow([r.code_id, _blank(r.P), _blank(r.n), _blank(r.k), _blank(r.d_bound), r.side, *vals, stage])
    return buf.getvalue()


def _blank(x):
    return "" if x is None else x


def report_table(ledger: BoundLedger, params: Mapping[str, tuple[int, int, int]] | None = None,
                 code_ids: Iterable[str] | None = None) -> tuple[str, str]:
    """Aligned text and CSV renderings of the ledger."""
    rows = ledger_rows(ledger, params, code_ids)
    return render_text(rows), render_csv(rows)


# reference values


def parse_reference_csv(text: str) -> list[TableRow]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        cells: dict = {}
        for m in METHODS:
            v = rec[m].strip()
            stage = rec.get("ets_stage", "").strip() if m == "ets" else ""
            cells[m] = (int(v), int(stage) if stage else None) if v else None
        rows.append(TableRow(
            rec["code_id"], int(rec["P"]), int(rec["n"]), int(rec["k"]), rec["side"], cells,
            int(rec["d_bound"]) if rec["d_bound"] else None))
    return rows


def load_reference_table() -> list[TableRow]:
    text = resources.files("apmldpc").joinpath("data/reference_bounds.csv").read_text()
    return parse_reference_csv(text)


@dataclass(frozen=True)
class Comparison:
    code_id: str
    side: str
    method: str
    found: int | None
    reference: int | None

    @property
    def status(self) -> str:
        if self.reference is None:
            return "extra" if self.found is not None else "absent"
        if self.found is None:
            return "missing"
        if self.found == self.reference:
            return "match"
        return "better" if self.found < self.reference else "regression"


def compare_to_reference(ledger: BoundLedger, reference: list[TableRow],
                         code_ids: Iterable[str] | None = None) -> list[Comparison]:
    wanted = None if code_ids is None else set(code_ids)
    out = []
    for r in reference:
        if wanted is not None and r.code_id not in wanted:
            continue
        for m in METHODS:
            e = ledger.get(r.code_id, r.side, m)
            ref = r.cells[m]
            out.append(Comparison(r.code_id, r.side, m, None if e is None else e.weight,
                                  None if ref is None else ref[0]))
    return out
