import json

import pytest

from apmldpc.catalog import format_spec
from apmldpc.cli import EXIT_BUILD, EXIT_CERT, EXIT_OK, EXIT_USAGE, main
from apmldpc.witness import load_fixtures, witness_record

from conftest import TOY_SPECS


@pytest.fixture
def toy_catalog(tmp_path):
    p = tmp_path / "toys.txt"
    p.write_text("".join(format_spec(s) + "\n" for s in TOY_SPECS.values()))
    return str(p)


def test_build_prints_parameters(capsys):
    assert main(["build", "--code", "C1", "--no-girth"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[[2592, 1300]]" in out and "rank_x=646 rank_z=646" in out


def test_build_rejects_non_orthogonal(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("B1 P=5 J=1 L=4 f=1:0,2:1 g=3:1,1:2\n")
    assert main(["build", "--catalog", str(p), "--code", "B1"]) == EXIT_BUILD


def test_usage_errors(capsys):
    assert main(["build", "--code", "C99"]) == EXIT_USAGE
    assert main(["nope"]) == EXIT_USAGE
    assert main(["search", "--code", "C1", "--methods", "foo"]) == EXIT_USAGE
    assert main(["exact", "--code", "C9", "--m", "5"]) == EXIT_USAGE


def test_certify_bundled_fixtures(capsys):
    assert main(["certify"]) == EXIT_CERT
    out = capsys.readouterr().out
    assert "3/4 records certified as claimed" in out
    assert "C1 Z dec w=10: rejected" in out


def _store(tmp_path, records):
    p = tmp_path / "w.jsonl"
    p.write_text("".join(json.dumps(witness_record(w)) + "\n" for w in records))
    return str(p)


def test_certify_detects_tampering(tmp_path, capsys):
    w = next(w for w, _ in load_fixtures() if w.code_id == "C10")
    assert main(["certify", _store(tmp_path, [w])]) == EXIT_OK
    flipped = w.__class__(w.code_id, w.side, w.method, tuple(sorted(set(w.support) ^ {1})), w.method_params)
    assert main(["certify", _store(tmp_path, [flipped])]) == EXIT_CERT
    relabeled = w.__class__("C1", w.side, w.method, w.support, w.method_params)
    assert main(["certify", _store(tmp_path, [relabeled])]) == EXIT_CERT
    assert main(["certify", str(tmp_path / "missing.jsonl")]) == EXIT_USAGE


def _search(tmp_path, catalog, name, workers):
    out = tmp_path / name
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dir": {"trials": 16, "sizes": [12]}, "dec": {"p": 0.15, "trials": 40}}))
    code = main(["search", "--catalog", catalog, "--code", "all", "--methods", "lat,dir,dec,exact",
                 "--config", str(cfg), "--seed", "7", "--workers", str(workers), "--out", str(out)])
    assert code == EXIT_OK
    return {f.name: f.read_bytes() for f in out.iterdir()}


def test_search_is_worker_invariant(tmp_path, toy_catalog, capsys):
    a = _search(tmp_path, toy_catalog, "a", 1)
    b = _search(tmp_path, toy_catalog, "b", 3)
    assert set(a) == {"witnesses.jsonl", "report.txt", "report.csv", "exact.json"}
    assert a == b
    assert b"T1" in a["witnesses.jsonl"]


def test_report_roundtrip(tmp_path, toy_catalog, capsys):
    files = _search(tmp_path, toy_catalog, "s", 2)
    store = tmp_path / "s" / "witnesses.jsonl"
    capsys.readouterr()
    assert main(["report", str(store), "--catalog", toy_catalog, "--out", str(tmp_path / "r")]) == EXIT_OK
    assert (tmp_path / "r" / "report.csv").read_bytes() == files["report.csv"]
    assert main(["certify", str(store), "--catalog", toy_catalog]) == EXIT_OK


def test_exact_cli(tmp_path, toy_catalog, capsys):
    assert main(["exact", "--catalog", toy_catalog, "--code", "T2", "--m", "2", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "rank_test=pass" in out and "status=proved-exhaustive" in out
    verdicts = json.loads((tmp_path / "exact_T2_m2.json").read_text())
    assert {v["side"] for v in verdicts} == {"X", "Z"}
    assert main(["exact", "--catalog", toy_catalog, "--code", "T2", "--m", "2", "--attest", "Q=x"]) == EXIT_USAGE
