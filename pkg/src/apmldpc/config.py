"""Per-method search configuration.

Config files are JSON objects with one section per method, e.g.::

    {"seed": 7, "dir": {"trials": 200, "sizes": [32, 48]}, "lat": {"max_pairs": 500}}
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Mapping

DEFAULTS: dict[str, dict[str, Any]] = {
    "lat": {"periods": None, "max_weight": 3, "max_pairs": 2000, "budget": 20000, "keep": 8},
    "blk": {"m_list": None, "sizes": None, "trials": 8, "generator": "isd", "keep": 8},
    "fib": {"m_list": None, "patterns": None, "sizes": None, "trials": 8, "generator": "isd",
            "max_patterns": 16, "keep": 8},
    "crt": {"splits": None, "combo_max": 2, "budget": 3000000, "trials": 8, "keep": 8},
    # a sweep over sizes 16..128 at 10^4 trials is the large-scale setting;
    # the default here is a desk-scale budget
    "dir": {"sizes": None, "trials": 50, "generator": "isd", "keep": 8},
    "ets": {"max_stage": 5, "cycle_budget": 200000, "pair_cap": 64, "stage_cap": 2000},
    "dec": {"p": 0.03, "trials": 200, "max_iters": 100, "decoder": "sum-product", "ms_scale": 0.8},
    "exact": {"m": None, "tau": None, "cap": 28},
}

GLOBAL_KEYS = {"seed", "workers"}


class ConfigError(ValueError):
    pass


def merge(config: Mapping[str, Any] | None) -> dict[str, Any]:
    """Defaults overlaid with ``config``; unknown sections or keys are errors."""
    out: dict[str, Any] = copy.deepcopy(DEFAULTS)
    out.setdefault("seed", 0)
    out.setdefault("workers", 1)
    for key, value in (config or {}).items():
        if key in GLOBAL_KEYS:
            out[key] = value
            continue
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config section {key!r}")
        if not isinstance(value, Mapping):
            raise ConfigError(f"section {key!r} must be an object")
        for k, v in value.items():
            if k not in DEFAULTS[key] and k != "seed":
                raise ConfigError(f"unknown key {key}.{k}")
            out[key][k] = v
    return out


def section(config: Mapping[str, Any] | None, name: str) -> dict[str, Any]:
    """One method section, with the global seed filled in when absent."""
    config = config or {}
    sec = dict(DEFAULTS[name])
    sec.update(config.get(name, {}))
    sec.setdefault("seed", config.get("seed", 0))
    return sec


def load_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return merge(None)
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return merge(data)
