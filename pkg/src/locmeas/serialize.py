"""JSON interchange for POVMs, encodings, plans and results.

Complex numbers are ``[re, im]`` pairs; matrices are
``{"rows", "cols", "entries"}`` with row-major nested entries. Every
document carries ``version`` and ``kind``.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import LocMeasError
from .povm import Povm
from .protocol import MeasurementPlan, PlanLeaf, PlanNode
from .subspace import LogicalSubspace

VERSION = 1


class SchemaError(LocMeasError):
    """Document does not follow the interchange schema."""


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise SchemaError(f"not a complex number: {v!r}")


def vector_to_json(v) -> list:
    return [complex_to_json(z) for z in np.asarray(v).reshape(-1)]


def vector_from_json(v) -> np.ndarray:
    if not isinstance(v, list):
        raise SchemaError("vector must be a list")
    return np.array([complex_from_json(z) for z in v], dtype=complex)


def matrix_to_json(m) -> dict:
    m = np.asarray(m)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "entries": [vector_to_json(r) for r in m]}


def matrix_from_json(d) -> np.ndarray:
    try:
        rows, cols, entries = d["rows"], d["cols"], d["entries"]
    except (KeyError, TypeError):
        raise SchemaError("matrix needs rows, cols, entries") from None
    m = np.array([vector_from_json(r) for r in entries], dtype=complex)
    if m.shape != (rows, cols):
        raise SchemaError(f"matrix entries have shape {m.shape}, declared ({rows}, {cols})")
    return m


def header(kind: str) -> dict:
    return {"version": VERSION, "kind": kind}


def _check_header(d, kind: str):
    if not isinstance(d, dict):
        raise SchemaError("document must be a JSON object")
    if d.get("version") != VERSION:
        raise SchemaError(f"unsupported version {d.get('version')!r}")
    if d.get("kind") != kind:
        raise SchemaError(f"expected kind {kind!r}, got {d.get('kind')!r}")


def povm_to_json(p: Povm) -> dict:
    return {**header("povm"), "dim": p.dim, "labels": list(p.labels), "elements": [matrix_to_json(e) for e in p.elements]}


def povm_from_json(d) -> Povm:
    _check_header(d, "povm")
    try:
        elems = tuple(matrix_from_json(e) for e in d["elements"])
        labels = tuple(str(x) for x in d.get("labels", ()))
    except KeyError:
        raise SchemaError("povm needs elements") from None
    if "dim" in d and any(e.shape != (d["dim"], d["dim"]) for e in elems):
        raise SchemaError("element shape does not match dim")
    return Povm(elems, labels)


def encoding_to_json(ls: LogicalSubspace) -> dict:
    return {**header("encoding"), "dims": list(ls.dims), "ket0L": vector_to_json(ls.ket0), "ket1L": vector_to_json(ls.ket1)}


def encoding_from_json(d) -> LogicalSubspace:
    _check_header(d, "encoding")
    try:
        return LogicalSubspace(tuple(int(x) for x in d["dims"]), vector_from_json(d["ket0L"]), vector_from_json(d["ket1L"]))
    except KeyError as e:
        raise SchemaError(f"encoding missing {e}") from None


def _node_to_json(n) -> dict:
    if isinstance(n, PlanLeaf):
        out = {
            "leaf": n.label,
            "correction": matrix_to_json(n.correction),
            "residual_start": n.residual_start,
            "rank_deficient": bool(n.rank_deficient),
        }
        if n.residual is not None:
            out["residual"] = matrix_to_json(n.residual)
        return out
    return {
        "subsystem": n.subsystem,
        "kraus0": matrix_to_json(n.kraus0),
        "kraus1": matrix_to_json(n.kraus1),
        "child0": _node_to_json(n.child0),
        "child1": _node_to_json(n.child1),
    }


def _node_from_json(d):
    if not isinstance(d, dict):
        raise SchemaError("plan node must be an object")
    if "leaf" in d:
        res = matrix_from_json(d["residual"]) if "residual" in d else None
        return PlanLeaf(
            str(d["leaf"]),
            matrix_from_json(d["correction"]) if "correction" in d else np.eye(2, dtype=complex),
            int(d.get("residual_start", 0)),
            res,
            bool(d.get("rank_deficient", False)),
        )
    try:
        return PlanNode(
            int(d["subsystem"]),
            matrix_from_json(d["kraus0"]),
            matrix_from_json(d["kraus1"]),
            _node_from_json(d["child0"]),
            _node_from_json(d["child1"]),
        )
    except KeyError as e:
        raise SchemaError(f"plan node missing {e}") from None


def plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    return v


def plan_to_json(plan: MeasurementPlan) -> dict:
    return {
        **header("plan"),
        "dims": list(plan.dims),
        "labels": list(plan.labels),
        "root": _node_to_json(plan.root),
        "trace": [{k: plain(v) for k, v in t.items()} for t in plan.trace],
    }


def plan_from_json(d) -> MeasurementPlan:
    _check_header(d, "plan")
    try:
        return MeasurementPlan(
            tuple(int(x) for x in d["dims"]),
            tuple(str(x) for x in d["labels"]),
            _node_from_json(d["root"]),
            tuple(dict(t) for t in d.get("trace", ())),
        )
    except KeyError as e:
        raise SchemaError(f"plan missing {e}") from None


def dumps(doc: Any) -> str:
    """Canonical text form; parse then dump reproduces the same bytes."""
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from None


def load_file(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from None
