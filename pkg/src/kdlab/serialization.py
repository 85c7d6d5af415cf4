"""JSON/CSV encoding: complex numbers as {"re", "im"}, 17 significant digits
in JSON and 12 in CSV, LF line endings, provenance comment on every CSV."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .hilbert import KDError, as_operator
from .kd_core import KdDistribution

VERSION = "0.1.0"


def _fmt(x: float, digits: int) -> str:
    if not math.isfinite(x):
        raise KDError(f"non-finite value {x} cannot be serialized")
    s = f"{x:.{digits}g}"
    if s == "-0":
        s = "0"
    return s


def to_plain(obj):
    """Convert numpy/complex containers into JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _dump(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for n, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(k)}: ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if n < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
            return
        out.append("[\n")
        for n, v in enumerate(obj):
            out.append(pad)
            _dump(v, indent, level + 1, out)
            out.append(",\n" if n < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt(v, 17)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return "{" + f'"re": {_fmt(v["re"], 17)}, "im": {_fmt(v["im"], 17)}' + "}"
    raise KDError(f"cannot serialize {type(v).__name__}")


def dumps_json(obj) -> str:
    """Deterministic JSON text with 17 significant digits for floats."""
    out: list[str] = []
    _dump(to_plain(obj), 2, 0, out)
    return "".join(out) + "\n"


def write_csv(header, rows, seed=None, command="") -> str:
    """CSV text: provenance comment line, header row, 12 significant digits."""
    buf = io.StringIO()
    buf.write(f"# kdlab {VERSION} command={command} seed={'none' if seed is None else seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(float(x), 12) if isinstance(x, (float, np.floating)) else
                    (int(x) if isinstance(x, (bool, np.bool_)) else x) for x in r])
    return buf.getvalue()


def parse_complex(x) -> complex:
    if isinstance(x, dict):
        if set(x) != {"re", "im"}:
            raise KDError(f"complex value must have keys re and im, got {sorted(x)}")
        return complex(float(x["re"]), float(x["im"]))
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    raise KDError(f"cannot read {x!r} as a complex number")


def parse_matrix(data, field: str) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise KDError(f"field {field!r} must be a nested list (row-major matrix)")
    n = len(data)
    if any(len(r) != n for r in data):
        raise KDError(f"field {field!r} is not a square matrix")
    m = np.array([[parse_complex(x) for x in r] for r in data], dtype=complex)
    return as_operator(m, field)


def parse_vector(data, field: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise KDError(f"field {field!r} must be a non-empty list")
    return np.array([parse_complex(x) for x in data], dtype=complex)


def load_json(path_or_text):
    """Load JSON from a path or an inline JSON string, reporting line/column on errors."""
    text = str(path_or_text)
    if not text.lstrip().startswith(("{", "[")):
        try:
            text = Path(text).read_text(encoding="utf-8")
        except OSError as exc:
            raise KDError(f"cannot read {path_or_text}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise KDError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def state_from_json(obj, field: str = "state") -> np.ndarray:
    """Density matrix from {"vector": [...]} or {"density": [[...]]}."""
    if not isinstance(obj, dict):
        raise KDError(f"field {field!r} must be an object with 'vector' or 'density'")
    keys = set(obj) - {"name", "comment"}
    if keys == {"vector"}:
        v = parse_vector(obj["vector"], f"{field}.vector")
        n = np.linalg.norm(v)
        if abs(n - 1) > 1e-10:
            raise KDError(f"field {field}.vector is not normalized (norm {n:.12g})")
        return np.outer(v, v.conj())
    if keys == {"density"}:
        return parse_matrix(obj["density"], f"{field}.density")
    raise KDError(f"field {field!r} needs exactly one of 'vector' or 'density'")


def kd_to_json(Q: KdDistribution) -> dict:
    return {"shape": list(Q.shape), "values": Q.values, "bases": list(Q.labels)}


def kd_csv_rows(Q: KdDistribution):
    for idx in np.ndindex(*Q.shape):
        z = Q.values[idx]
        yield list(idx) + [float(z.real), float(z.imag)]
