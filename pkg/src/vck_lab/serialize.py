"""Canonical JSON interchange for every artifact the lab produces.

One emitter, one schema per artifact, loaders that reject unknown keys.
Floats are written in scientific notation with 17 significant digits, which
round-trips float64 bit-exactly; keys are sorted, so re-serializing a loaded
document reproduces it byte for byte.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError
from .space import MeasuredFunction, Part, PartiteSpace, Relation


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise InvalidArgumentError(f"non-finite value {x} cannot be serialized")
    return f"{x:.16e}"


def dumps_canonical(obj) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    out = []
    _emit(obj, out)
    return "".join(out)


def _emit(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, Fraction):
        out.append(json.dumps(f"{obj.numerator}/{obj.denominator}"))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise InvalidArgumentError(f"JSON keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, item in enumerate(seq):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise InvalidArgumentError(f"cannot serialize {type(obj).__name__}")


def write_canonical(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(obj))
        fh.write("\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def parse_fraction(text) -> Fraction:
    if isinstance(text, str) and "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(text)


def _check_keys(record, allowed, context):
    unknown = set(record) - set(allowed)
    if unknown:
        raise InvalidArgumentError(f"{context}: unknown keys {sorted(unknown)}")


# --------------------------------------------------------------------------
# PartiteSpace + functions document
#
# {"parts":    [{"name", "size", "weights": [...]}, ...],
#  "functions":[{"name", "signature": [part indices], "values": [row-major],
#                "signed": bool (optional, default false)}, ...]}


def space_to_doc(space: PartiteSpace) -> dict:
    return {"parts": [{"name": p.name, "size": p.size,
                       "weights": [float(w) for w in p.weights]}
                      for p in space.parts]}


def functions_to_doc(space: PartiteSpace, functions) -> dict:
    doc = space_to_doc(space)
    entries = []
    for f in functions:
        entry = {"name": f.name, "signature": list(f.signature),
                 "values": f.values.ravel()}
        if f.signed:
            entry["signed"] = True
        entries.append(entry)
    doc["functions"] = entries
    return doc


def space_from_doc(doc) -> PartiteSpace:
    _check_keys(doc, {"parts", "functions"}, "space document")
    parts = []
    for rec in doc["parts"]:
        _check_keys(rec, {"name", "size", "weights"}, "part record")
        parts.append(Part(rec["name"], int(rec["size"]),
                          tuple(float(w) for w in rec["weights"])))
    return PartiteSpace(tuple(parts))


def functions_from_doc(doc, space: PartiteSpace | None = None):
    space = space or space_from_doc(doc)
    out = []
    for rec in doc.get("functions", []):
        _check_keys(rec, {"name", "signature", "values", "signed"}, "function record")
        sig = tuple(int(i) for i in rec["signature"])
        shape = space.sizes(sig)
        vals = np.array([float(v) for v in rec["values"]],
                        dtype=np.float64).reshape(shape)
        signed = bool(rec.get("signed", False))
        cls = MeasuredFunction if signed else _relation_or_function(vals)
        out.append(cls(space, sig, vals, name=rec["name"], signed=signed)
                   if cls is MeasuredFunction
                   else cls(space, sig, vals, name=rec["name"]))
    return space, out


def _relation_or_function(vals) -> type:
    return Relation if np.all((vals == 0.0) | (vals == 1.0)) else MeasuredFunction


def find_function(functions, name=None, signature=None):
    """Select a stored function by name and/or signature; default to the first."""
    candidates = list(functions)
    if name is not None:
        candidates = [f for f in candidates if f.name == name]
    if signature is not None:
        sig = tuple(int(i) for i in signature)
        candidates = [f for f in candidates if f.signature == sig]
    if not candidates:
        raise InvalidArgumentError(
            f"no stored function matches name={name!r} signature={signature!r}")
    return candidates[0]
