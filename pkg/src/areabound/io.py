"""Deterministic JSON / JSON-lines / CSV emission and diagnostic file loading."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__

REPORT_COLUMNS = ("bound_id", "lhs", "rhs", "slack", "verdict")


class InputError(ValueError):
    """Malformed input file; the message names the file and the offending field."""


def sanitize(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(sanitize(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def envelope(record: dict, config: dict, grid: dict | None = None) -> dict:
    """Attach version, resolved config, its digest and grid metadata to a record."""
    out = dict(record)
    out["version"] = __version__
    out["config"] = config
    out["config_digest"] = config_digest(config)
    if grid is not None:
        out["grid"] = grid
    return out


def append_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for r in records:
            fh.write(canonical_json(r) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise InputError(f"{path}: line {n}: {e.msg}") from e
    return out


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(json.dumps(sanitize(obj), sort_keys=True, indent=1) + "\n",
                          encoding="utf-8")


def load_json(path: str | Path, required: Iterable[str] = ()) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{p}: cannot read ({e.strerror})") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{p}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(obj, dict):
        raise InputError(f"{p}: top level must be an object")
    for key in required:
        if key not in obj:
            raise InputError(f"{p}: missing field '{key}'")
    return obj


def write_csv(path: str | Path, rows: Iterable[dict], columns=REPORT_COLUMNS) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore",
                           lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: sanitize(r.get(c)) for c in columns})
