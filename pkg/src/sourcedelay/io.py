"""Config files and CSV/JSON output.

Config files are plain ``key = value`` lines; ``#`` starts a comment. Keys are
``n, m, delta, q, lambda, f, M``. Floats are written as their shortest
round-tripping repr, so every file reads back to the exact in-memory value.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .params import NetworkConfig

_INT_KEYS = {"n", "m", "f", "M"}
_FLOAT_KEYS = {"delta", "q", "lam"}
_ALIASES = {"lambda": "lam", "Δ": "delta", "λ": "lam"}


def canonical_key(key: str) -> str:
    key = key.strip()
    key = _ALIASES.get(key, key)
    if key not in _INT_KEYS | _FLOAT_KEYS:
        raise KeyError(f"unknown config key {key!r}")
    return key


def coerce(key: str, value):
    key = canonical_key(key)
    if key in _INT_KEYS:
        v = float(value)
        if v != int(v):
            raise ValueError(f"{key} must be an integer, got {value!r}")
        return int(v)
    return float(value)


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[canonical_key(key)] = coerce(key, value.strip())
    return out


def load_config(path=None, overrides: dict | None = None) -> NetworkConfig:
    """Build a config from an optional file plus explicit overrides (overrides win)."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[canonical_key(k)] = coerce(k, v)
    missing = {"n", "m"} - values.keys()
    if missing:
        raise ValueError(f"missing config keys: {sorted(missing)}")
    return NetworkConfig(**values)


def config_record(cfg: NetworkConfig) -> dict:
    """Config as written to output files (``lam`` spelled ``lambda``)."""
    return {("lambda" if k == "lam" else k): v for k, v in cfg.as_dict().items()}


def config_header(cfg: NetworkConfig) -> str:
    return " ".join(f"{k}={v!r}" for k, v in config_record(cfg).items())


def fmt(x) -> str:
    if isinstance(x, (bool,)):
        return str(x)
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return repr(x)


def write_csv(path, columns, rows, cfg: NetworkConfig | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if cfg is not None:
            fh.write(f"# {config_header(cfg)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(x) for x in row] for row in reader]
    return header, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return obj.item()
    return obj


def write_json(path, payload: dict) -> None:
    # json emits repr() floats, which round-trip exactly
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
