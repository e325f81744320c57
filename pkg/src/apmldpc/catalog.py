"""Reader for the line-oriented code catalog.

One record per line::

    C1 P=216 J=3 L=12 f=73:87,199:75,... g=97:188,...

``a:b`` denotes ``x -> a*x + b (mod P)``.  ``#`` starts a comment.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .apm import AffineMap, CodeSpec


class CatalogError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<catalog>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


def _parse_maps(text: str, P: int) -> tuple[AffineMap, ...]:
    maps = []
    for item in text.split(","):
        a, b = item.split(":")
        maps.append(AffineMap(int(a), int(b), P))
    return tuple(maps)


def parse_line(line: str) -> CodeSpec:
    tokens = line.split()
    code_id, rest = tokens[0], tokens[1:]
    fields = {}
    for tok in rest:
        if "=" not in tok:
            raise ValueError(f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        fields[key] = value
    missing = {"P", "J", "L", "f", "g"} - fields.keys()
    if missing:
        raise ValueError(f"missing fields {sorted(missing)}")
    P, J, L = int(fields["P"]), int(fields["J"]), int(fields["L"])
    return CodeSpec(code_id, P, J, L, _parse_maps(fields["f"], P), _parse_maps(fields["g"], P))


def format_spec(spec: CodeSpec) -> str:
    f = ",".join(f"{m.a}:{m.b}" for m in spec.f)
    g = ",".join(f"{m.a}:{m.b}" for m in spec.g)
    return f"{spec.id} P={spec.P} J={spec.J} L={spec.L} f={f} g={g}"


def parse_catalog(text: str, source: str = "<catalog>") -> dict[str, CodeSpec]:
    specs: dict[str, CodeSpec] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            spec = parse_line(line)
        except (ValueError, IndexError) as exc:
            raise CatalogError(str(exc), lineno, source) from None
        if spec.id in specs:
            raise CatalogError(f"duplicate code id {spec.id}", lineno, source)
        specs[spec.id] = spec
    return specs


def load_catalog(path: str | Path | None = None) -> dict[str, CodeSpec]:
    if path is None:
        text = resources.files("apmldpc").joinpath("data/catalog.txt").read_text()
        return parse_catalog(text, "catalog.txt")
    path = Path(path)
    return parse_catalog(path.read_text(), str(path))


def get_spec(code_id: str, path: str | Path | None = None) -> CodeSpec:
    catalog = load_catalog(path)
    try:
        return catalog[code_id]
    except KeyError:
        raise KeyError(f"unknown code id {code_id!r}; known: {', '.join(catalog)}") from None
