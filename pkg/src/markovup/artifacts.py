"""Deterministic CSV/JSON writers with provenance and atomic replace."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def provenance(config_hash: str) -> dict:
    return {"toolkit": "markovup", "version": __version__, "config_sha256": config_hash}


def write_csv(path, columns: Sequence[str], rows: Iterable[dict], config_hash: str) -> Path:
    """CSV with ``#``-prefixed provenance lines above the header row."""
    buf = io.StringIO()
    buf.write(f"# markovup {__version__}\n# config_sha256 {config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return atomic_write(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "numerator") and not isinstance(obj, (int, bool)):
        return float(obj)
    return obj


def write_json(path, payload: dict, config_hash: str) -> Path:
    doc = {"provenance": provenance(config_hash), **payload}
    return atomic_write(path, json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))
