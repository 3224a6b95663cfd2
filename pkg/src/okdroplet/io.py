"""Serialisation: configuration files, JSON and CSV reports.

Floats are written with 17 significant digits so every value round-trips
bit for bit; JSON keys are sorted.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .errors import SchemaError
from .model import (
    ClusterAnsatz,
    ClusterMasses,
    Configuration,
    ProblemParams,
    SeparatedBalls,
    SingleBall,
    StandardDoubleBubble,
)

SHAPES = ("SingleBall", "StandardDoubleBubble", "SeparatedBalls")


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite float {x!r}")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, 17-digit floats, trailing newline."""
    return _dump(obj, 0, indent) + "\n"


def _dump(obj, level, indent):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(obj[k], level + 1, indent)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _dump(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_csv(rows, columns) -> str:
    """RFC 4180 text (CRLF line ends, minimal quoting)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in (row[c] for c in columns)])
    return buf.getvalue()


def cluster_to_dict(a: ClusterAnsatz) -> dict:
    d = {"shape": a.shape_tag, "m1": float(a.m1), "m2": float(a.m2)}
    if isinstance(a.shape, SeparatedBalls):
        d["distance"] = float(a.shape.center_distance)
    return d


def configuration_to_list(c: Configuration) -> list:
    return [cluster_to_dict(a) for a in c.clusters]


def _num(v, ptr):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"expected a number, got {v!r}", ptr)
    return float(v)


def cluster_from_dict(d, ptr: str = "") -> ClusterAnsatz:
    if not isinstance(d, dict):
        raise SchemaError("cluster must be an object", ptr)
    allowed = {"shape", "m1", "m2", "distance"}
    for k in d:
        if k not in allowed:
            raise SchemaError(f"unknown key {k!r}", f"{ptr}/{k}")
    for k in ("shape", "m1", "m2"):
        if k not in d:
            raise SchemaError("missing required key", f"{ptr}/{k}")
    shape = d["shape"]
    if shape not in SHAPES:
        raise SchemaError(f"shape must be one of {SHAPES}, got {shape!r}", f"{ptr}/shape")
    m1, m2 = _num(d["m1"], f"{ptr}/m1"), _num(d["m2"], f"{ptr}/m2")
    try:
        masses = ClusterMasses(m1, m2)
        if shape == "SingleBall":
            if "distance" in d:
                raise SchemaError("distance only applies to SeparatedBalls", f"{ptr}/distance")
            return ClusterAnsatz(masses, SingleBall(1 if m2 == 0 else 2))
        if shape == "StandardDoubleBubble":
            if "distance" in d:
                raise SchemaError("distance only applies to SeparatedBalls", f"{ptr}/distance")
            return ClusterAnsatz(masses, StandardDoubleBubble())
        if "distance" not in d:
            raise SchemaError("SeparatedBalls needs a distance", f"{ptr}/distance")
        return ClusterAnsatz(masses, SeparatedBalls(_num(d["distance"], f"{ptr}/distance")))
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError(str(exc), ptr) from exc


def configuration_from_list(items, params: ProblemParams) -> Configuration:
    if not isinstance(items, list):
        raise SchemaError("configuration file must be a JSON list of clusters", "")
    clusters = [cluster_from_dict(d, f"/{i}") for i, d in enumerate(items)]
    return Configuration(params, tuple(clusters))


def load_configuration(text: str, params: ProblemParams) -> Configuration:
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "") from exc
    return configuration_from_list(items, params)


def dump_configuration(c: Configuration) -> str:
    return dumps(configuration_to_list(c))
