"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 certification failure, 3 construction failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .apm import ConstructionError, build_code, check_active_orthogonality, delta
from .catalog import CatalogError, load_catalog
from .config import ConfigError, load_config, merge
from .witness import (BoundLedger, RejectedWitness, certify, compare_to_reference, dumps_store,
                      ledger_store, load_fixtures, load_reference_table, read_store, report_table)

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_BUILD = 0, 1, 2, 3
SEARCH_METHODS = ("lat", "blk", "fib", "crt", "dir", "ets", "dec", "exact")

log = logging.getLogger("apmldpc")


class UsageError(Exception):
    pass


def _catalog(args):
    try:
        return load_catalog(args.catalog)
    except CatalogError as exc:
        raise UsageError(str(exc)) from None
    except OSError as exc:
        raise UsageError(f"cannot read catalog: {exc}") from None


def _code_ids(args, catalog) -> list[str]:
    ids = args.code or []
    if not ids or ids == ["all"]:
        return list(catalog)
    for cid in ids:
        if cid not in catalog:
            raise UsageError(f"unknown code id {cid!r}; known: {', '.join(catalog)}")
    return ids


class _Codes:
    """Build each code once, on demand."""

    def __init__(self, catalog, girth=False):
        self.catalog = catalog
        self.girth = girth
        self._built = {}

    def __call__(self, cid):
        if cid not in self._built:
            if cid not in self.catalog:
                raise UsageError(f"unknown code id {cid!r}")
            self._built[cid] = build_code(self.catalog[cid], compute_girth=self.girth)
        return self._built[cid]

    def params(self, ids):
        return {cid: (self(cid).spec.P, self(cid).n, self(cid).k) for cid in ids}


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ----------------------------------------------------------------------
# build


def cmd_build(args) -> int:
    catalog = _catalog(args)
    status = EXIT_OK
    for cid in _code_ids(args, catalog):
        spec = catalog[cid]
        rep = check_active_orthogonality(spec)
        d = sorted(delta(spec.J, spec.L))
        if not rep.passed:
            print(f"{cid}: construction failure, Psi_r != 0 for r in {rep.failing}")
            status = EXIT_BUILD
            continue
        code = build_code(spec, compute_girth=not args.no_girth)
        print(f"{cid}: [[{code.n}, {code.k}]] P={spec.P} J={spec.J} L={spec.L}")
        print(f"  rank_x={code.rank_x} rank_z={code.rank_z} k={code.k}")
        if not args.no_girth:
            print(f"  girth_x={_fmt_girth(code.girth_x)} girth_z={_fmt_girth(code.girth_z)}")
        print(f"  Delta={d} {rep.summary()}")
    return status


def _fmt_girth(g: float) -> str:
    return "inf" if g == float("inf") else str(int(g))


# ----------------------------------------------------------------------
# certify


def cmd_certify(args) -> int:
    codes = _Codes(_catalog(args))
    try:
        records = read_store(args.store) if args.store else load_fixtures()
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read witness file: {exc}") from None
    if args.code:
        records = [(w, c) for w, c in records if w.code_id in set(args.code)]
    failed = 0
    for w, claimed in records:
        tag = f"{w.code_id} {w.side} {w.method} w={w.weight}"
        try:
            code = codes(w.code_id)
            cert = certify(code, w.side, w.vector(code.n))
        except (ValueError, UsageError) as exc:
            print(f"{tag}: FAIL ({exc})")
            failed += 1
            continue
        expect = claimed is None or claimed.accepted
        ok = cert.accepted or not expect
        print(f"{tag}: {cert.verdict} kernel_ok={cert.kernel_ok} "
              f"rank {cert.rank_base}->{cert.rank_aug} non_latent={cert.non_latent}"
              + ("" if ok else "  FAIL"))
        failed += not ok
    print(f"{len(records) - failed}/{len(records)} records certified as claimed")
    return EXIT_CERT if failed else EXIT_OK


# ----------------------------------------------------------------------
# search


def _run_method(method, code, side, config, workers):
    if method == "lat":
        from .latent import search_latent
        return search_latent(code, side, config)
    if method == "blk":
        from .restricted import search_blk
        return search_blk(code, side, config=config, workers=workers)
    if method == "fib":
        from .restricted import search_fib
        return search_fib(code, side, config=config, workers=workers)
    if method == "crt":
        from .restricted import search_crt
        return search_crt(code, side, config=config, workers=workers)
    if method == "dir":
        from .restricted import search_dir
        return search_dir(code, side, config=config, workers=workers)
    if method == "ets":
        from .ets import ets_witnesses
        return ets_witnesses(code, side, config=config)
    if method == "dec":
        from .decoder import harvest_residuals
        return harvest_residuals(code, side, config=config, workers=workers)
    raise UsageError(f"unknown method {method!r}")


def _parse_methods(text: str | None) -> list[str]:
    if text is None:
        return ["lat"]
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in SEARCH_METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}; choose from {','.join(SEARCH_METHODS)}")
    return methods


def _load_config(args) -> dict:
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        raise UsageError(str(exc)) from None
    if args.seed is not None:
        config["seed"] = args.seed
        for name in SEARCH_METHODS:
            if name in config:
                config[name].pop("seed", None)
    if getattr(args, "workers", None) is not None:
        config["workers"] = args.workers
    return merge(config)


def cmd_search(args) -> int:
    catalog = _catalog(args)
    ids = _code_ids(args, catalog)
    methods = _parse_methods(args.methods)
    config = _load_config(args)
    workers = int(config["workers"])
    codes = _Codes(catalog)
    ledger = BoundLedger()
    if args.store:
        try:
            records = read_store(args.store)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read witness store: {exc}") from None
        for w, _ in records:
            code = codes(w.code_id)
            try:
                ledger.register(w, certify(code, w.side, w.vector(code.n)))
            except RejectedWitness as exc:
                print(f"store: {exc}", file=sys.stderr)
                return EXIT_CERT
    exact = []
    for cid in ids:
        try:
            code = codes(cid)
        except ConstructionError as exc:
            print(f"{cid}: {exc}", file=sys.stderr)
            return EXIT_BUILD
        for method in methods:
            if method == "exact":
                exact.append(_exact_verdicts(code, config, None, {}, args.out))
                continue
            for side in args.sides:
                found = _run_method(method, code, side, config, workers)
                ledger.register_many(found)
                best = min((w.weight for w, _ in found), default=None)
                print(f"{cid} {side} {method}: {len(found)} certified, best {best}")
    store = dumps_store(ledger_store(ledger))
    text, table_csv = report_table(ledger, codes.params(sorted(set(ledger.code_ids()) | set(ids))))
    if args.out:
        out = Path(args.out)
        _write(out / "witnesses.jsonl", store)
        _write(out / "report.txt", text)
        _write(out / "report.csv", table_csv)
        if exact:
            _write(out / "exact.json", json.dumps([v for e in exact for v in e], indent=1, sort_keys=True) + "\n")
    print(text, end="")
    return EXIT_OK


# ----------------------------------------------------------------------
# exact


def _exact_verdicts(code, config, tau, attest, out_dir, m=None):
    from .exact import exact_latent, pick_block_factor
    m = m or config["exact"]["m"] or pick_block_factor(code)
    if m is None:
        print(f"{code.id} exact: no block factor passes the rank test")
        return []
    verdicts = exact_latent(code, m, tau, config, out_dir=out_dir, attestations=attest)
    return [v.to_dict() for v in verdicts.values()]


def cmd_exact(args) -> int:
    catalog = _catalog(args)
    ids = _code_ids(args, catalog)
    if len(ids) != 1:
        raise UsageError("exact takes exactly one --code")
    spec = catalog[ids[0]]
    if args.m <= 0 or spec.P % args.m:
        raise UsageError(f"block factor {args.m} does not divide P={spec.P}")
    attest = {}
    for item in args.attest or []:
        side, _, path = item.partition("=")
        if side not in ("X", "Z") or not path:
            raise UsageError(f"--attest expects SIDE=FILE, got {item!r}")
        attest[side] = path
    config = _load_config(args)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
    code = build_code(spec, compute_girth=False)
    verdicts = _exact_verdicts(code, config, args.tau, attest, args.out, m=args.m)
    for v in verdicts:
        print(f"{v['code']} {v['side']} m={v['m']}: rank_test={'pass' if v['rank_pass'] else 'fail'} "
              f"dim={v['dim']} status={v['status']} tau={v['tau']} witness={v['witness_weight']}"
              f" -> {v['statement']}")
    if args.out:
        _write(Path(args.out) / f"exact_{code.id}_m{args.m}.json",
               json.dumps(verdicts, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


# ----------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    catalog = _catalog(args)
    codes = _Codes(catalog)
    ledger = BoundLedger()
    try:
        records = read_store(args.store)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read witness store: {exc}") from None
    for w, cert in records:
        code = codes(w.code_id)
        cert = cert or certify(code, w.side, w.vector(code.n))
        if cert.accepted:
            ledger.register(w, cert)
    ids = ledger.code_ids() if not args.code else _code_ids(args, catalog)
    text, table_csv = report_table(ledger, codes.params(ids), ids)
    print(text, end="")
    if args.compare:
        for c in compare_to_reference(ledger, load_reference_table(), ids):
            if c.status not in ("absent", "missing"):
                print(f"{c.code_id} {c.side} {c.method}: found {c.found} reference {c.reference} [{c.status}]")
    if args.out:
        _write(Path(args.out) / "report.txt", text)
        _write(Path(args.out) / "report.csv", table_csv)
    return EXIT_OK


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--catalog", help="catalog file (default: bundled C1-C10)")
    common.add_argument("--code", action="append", help="code id, repeatable; 'all' for every entry")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="apmldpc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="construct codes and print parameters")
    b.add_argument("--no-girth", action="store_true", help="skip the girth computation")
    b.set_defaults(func=cmd_build)

    c = sub.add_parser("certify", parents=[common], help="re-certify witness records")
    c.add_argument("store", nargs="?", help="witness JSONL file (default: bundled fixtures)")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("search", parents=[common], help="run upper-bound searches")
    s.add_argument("--methods", help=f"comma list from {','.join(SEARCH_METHODS)} (default lat)")
    s.add_argument("--sides", default="XZ", type=lambda t: [x for x in t.upper() if x in "XZ"])
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--config", help="JSON config with per-method sections")
    s.add_argument("--store", help="existing witness store to extend")
    s.add_argument("--out", help="output directory for witnesses.jsonl and reports")
    s.set_defaults(func=cmd_search)

    e = sub.add_parser("exact", parents=[common], help="exact latent certification")
    e.add_argument("--m", type=int, required=True, help="block factor")
    e.add_argument("--tau", type=int, help="compressed weight threshold (default: best latent weight / m)")
    e.add_argument("--attest", action="append", metavar="SIDE=FILE", help="UNSAT attestation file")
    e.add_argument("--seed", type=int)
    e.add_argument("--config")
    e.add_argument("--out", help="directory for CNF files and the verdict")
    e.set_defaults(func=cmd_exact)

    r = sub.add_parser("report", parents=[common], help="render the bound table from a store")
    r.add_argument("store")
    r.add_argument("--compare", action="store_true", help="compare with the reference table")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUILD


if __name__ == "__main__":
    sys.exit(main())
