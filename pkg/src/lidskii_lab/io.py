"""Persistence: Matrix Market matrices, JSON envelopes, CSV tables and sequences.

All writers are deterministic: floats are written with ``repr`` and JSON keys
are sorted, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np
import scipy.io

SCHEMA_VERSION = "1"


def write_matrix(path, a) -> Path:
    """Dense complex general matrix in Matrix Market array format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = _io.BytesIO()
    scipy.io.mmwrite(buf, np.asarray(a, dtype=complex), field="complex", symmetry="general")
    path.write_bytes(buf.getvalue())
    return path


def read_matrix(path) -> np.ndarray:
    m = scipy.io.mmread(str(path))
    if hasattr(m, "toarray"):
        m = m.toarray()
    return np.asarray(m, dtype=complex)


def to_jsonable(obj):
    """Convert numpy scalars/arrays and complex numbers into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return {"re": c.real, "im": c.imag}
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def digest(obj) -> str:
    """SHA-256 of the canonical JSON form of ``obj``."""
    text = json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def envelope(op: str, inputs, outputs, margins) -> dict:
    return {"op": op, "inputs_digest": digest(inputs), "outputs": to_jsonable(outputs),
            "margins": to_jsonable(margins), "schema_version": SCHEMA_VERSION}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        c = complex(v)
        return f"{c.real!r}{c.imag:+}j" if c.imag else repr(c.real)
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> List[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_sequence(path, values) -> Path:
    """Sequence CSV with columns ``n, s_n`` (1-based)."""
    return write_csv(path, ["n", "s_n"], ((i + 1, float(v)) for i, v in enumerate(values)))


def read_sequence(path) -> np.ndarray:
    rows = read_csv(path)
    idx = [int(r["n"]) for r in rows]
    if idx != list(range(1, len(idx) + 1)):
        raise ValueError("sequence file must list n = 1, 2, ... in order")
    return np.array([float(r["s_n"]) for r in rows])


def read_json_text(text: str):
    return json.loads(text)
