"""Reading and writing pair sets, alignments and result tables.

Floats are written with 17 significant digits so every value round-trips exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import PointLineError
from .geometry import Alignment, PairSet

PAIR_FIELDS = ("px", "py", "vx", "vy", "b")


def fmt(x) -> str:
    return format(float(x), ".17g")


def _detect(path, fmt_hint):
    if fmt_hint:
        return fmt_hint
    if path is not None and str(path).lower().endswith(".json"):
        return "json"
    return "csv"


def _open_text(path):
    if path is None or str(path) == "-":
        return sys.stdin.read()
    return Path(path).read_text()


# -------------------------------------------------------------------- pairs


def pairs_to_records(A: PairSet, weights=None, extra=None) -> list[dict]:
    recs = []
    for i in range(len(A)):
        r = {
            "px": float(A.points[i, 0]),
            "py": float(A.points[i, 1]),
            "vx": float(A.normals[i, 0]),
            "vy": float(A.normals[i, 1]),
            "b": float(A.offsets[i]),
        }
        if weights is not None:
            r["w"] = float(weights[i])
        if extra:
            for k, v in extra.items():
                r[k] = float(v[i])
        recs.append(r)
    return recs


def records_to_pairs(recs) -> tuple[PairSet, np.ndarray | None]:
    recs = list(recs)
    if not recs:
        raise PointLineError("no pairs in input")
    try:
        arr = np.array([[float(r[k]) for k in PAIR_FIELDS] for r in recs])
        w = None
        if all(r.get("w") not in (None, "") for r in recs):
            w = np.array([float(r["w"]) for r in recs])
    except (KeyError, TypeError, ValueError) as exc:
        raise PointLineError(f"malformed pair record: {exc}") from exc
    if not np.all(np.isfinite(arr)):
        raise PointLineError("pair data must be finite")
    return PairSet(arr[:, 0:2], arr[:, 2:4], arr[:, 4]), w


def dumps_pairs(A: PairSet, weights=None, fmt_name="csv", extra=None) -> str:
    if fmt_name == "json":
        return json.dumps({"pairs": pairs_to_records(A, weights, extra)}, indent=1)
    cols = list(PAIR_FIELDS) + (["w"] if weights is not None else []) + list(extra or {})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in pairs_to_records(A, weights, extra):
        w.writerow([fmt(r[c]) for c in cols])
    return buf.getvalue()


def loads_pairs(text: str, fmt_name="csv") -> tuple[PairSet, np.ndarray | None]:
    if fmt_name == "json":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PointLineError(f"invalid JSON: {exc}") from exc
        recs = d["pairs"] if isinstance(d, dict) and "pairs" in d else d
        if not isinstance(recs, list):
            raise PointLineError("expected a list of pair records")
        return records_to_pairs(recs)
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and not set(PAIR_FIELDS) <= set(rows[0]):
        raise PointLineError(f"CSV header must contain {','.join(PAIR_FIELDS)}")
    return records_to_pairs(rows)


def read_pairs(path, fmt_name=None):
    return loads_pairs(_open_text(path), _detect(path, fmt_name))


def write_text(path, text: str):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def parse_record_line(line: str):
    """One streamed record ``px,py,vx,vy,b[,w]`` -> (point, (normal, offset), w), or None for blanks."""
    line = line.strip()
    if not line or line.startswith("#") or line.startswith("px"):
        return None
    parts = line.split(",")
    if len(parts) not in (5, 6):
        raise PointLineError(f"expected 5 or 6 comma-separated fields, got {len(parts)}")
    try:
        vals = [float(x) for x in parts]
    except ValueError as exc:
        raise PointLineError(f"non-numeric field in {line!r}") from exc
    if not all(math.isfinite(v) for v in vals):
        raise PointLineError("stream values must be finite")
    w = vals[5] if len(vals) == 6 else 1.0
    return (vals[0], vals[1]), ((vals[2], vals[3]), vals[4]), w


# --------------------------------------------------------------- alignments


def alignment_to_dict(a: Alignment) -> dict:
    return {
        "theta": a.angle,
        "t": [float(x) for x in a.translation],
        "R": [[float(x) for x in row] for row in a.rotation],
    }


def alignment_from_dict(d: dict) -> Alignment:
    try:
        if "R" in d:
            return Alignment(np.array(d["R"], dtype=float), d["t"])
        return Alignment.from_angle(float(d["theta"]), d["t"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PointLineError):
            raise
        raise PointLineError(f"malformed alignment: {exc}") from exc


def read_alignment(path) -> Alignment:
    try:
        return alignment_from_dict(json.loads(_open_text(path)))
    except json.JSONDecodeError as exc:
        raise PointLineError(f"invalid JSON: {exc}") from exc


# ------------------------------------------------------------------ tables


def dumps_rows(rows, fmt_name="csv", columns=None) -> str:
    rows = list(rows)
    if fmt_name == "json":
        return json.dumps(rows, indent=1)
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def loads_rows(text: str) -> list[dict]:
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in r.items():
            try:
                row[k] = int(v)
            except ValueError:
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
        out.append(row)
    return out
