"""Versioned JSON formats for graphs, predictions and reports."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .arrangement import Arrangement
from .bundles import PredictionBundle
from .errors import SchemaError
from .geometry import QuadBezier
from .lanegraph import BOUNDARY, BOUNDARY_IDS, LANE, FovSpec, LaneCurve, LaneGraph, boundary_bezier

GRAPH_VERSION = "1.0"
PREDICTION_VERSION = "1.0"
REPORT_VERSION = "1.0"

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_FOV = {
    "type": "object",
    "properties": {k: {"type": "number"} for k in ("x_min", "x_max", "z_min", "z_max", "resolution")},
    "required": ["x_min", "x_max", "z_min", "z_max"],
    "additionalProperties": False,
}

GRAPH_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": GRAPH_VERSION},
        "frame": {"enum": ["normalized", "world"]},
        "fov": _FOV,
        "curves": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "integer"},
                    "role": {"enum": [LANE, BOUNDARY]},
                    "control_points": {"type": "array", "items": _POINT, "minItems": 3, "maxItems": 3},
                },
                "required": ["id", "control_points"],
                "additionalProperties": False,
            },
        },
        "incidence": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        },
        "metadata": {"type": "object"},
    },
    "required": ["version", "curves"],
    "additionalProperties": False,
}

PREDICTION_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": PREDICTION_VERSION},
        "frame": {"enum": ["normalized", "world"]},
        "fov": _FOV,
        "curves": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "control_points": {"type": "array", "items": _POINT, "minItems": 3, "maxItems": 3},
                    "prob": _PROB,
                },
                "required": ["control_points", "prob"],
                "additionalProperties": False,
            },
        },
        "connectivity": {"type": "array", "items": {"type": "array", "items": _PROB}},
        "cycles": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "member_probs": {"type": "array", "items": _PROB},
                    "prob": _PROB,
                    "center": _POINT,
                },
                "required": ["member_probs", "prob", "center"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["version", "curves", "connectivity", "cycles"],
    "additionalProperties": False,
}


def _check(doc: Any, schema: dict, what: str) -> None:
    if isinstance(doc, dict) and "version" in doc:
        want = schema["properties"]["version"]["const"]
        if doc["version"] != want:
            raise SchemaError(f"unsupported {what} version {doc['version']!r} (expected {want!r})")
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path)
        raise SchemaError(f"{what}: {e.message} at /{path}") from None


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, two-space indent, shortest round-trip floats."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def read_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None


def write_text(path, text: str) -> None:
    Path(path).write_text(text)


# ---------------------------------------------------------------------------
# graphs


def _fov_from(doc) -> FovSpec:
    return FovSpec(**doc["fov"]) if "fov" in doc else FovSpec()


def _fov_dict(fov: FovSpec) -> dict:
    return {"x_min": fov.x_min, "x_max": fov.x_max, "z_min": fov.z_min,
            "z_max": fov.z_max, "resolution": fov.resolution}


def _side_of(b: QuadBezier) -> int | None:
    for side in range(4):
        ref = boundary_bezier(side)
        ends = {ref.p0, ref.p2}
        if {b.p0, b.p2} == ends and abs(b.p1[0] - ref.p1[0]) + abs(b.p1[1] - ref.p1[1]) < 1e-9:
            return side
    return None


def graph_from_dict(doc: dict) -> LaneGraph:
    _check(doc, GRAPH_SCHEMA, "graph")
    fov = _fov_from(doc)
    world = doc.get("frame", "normalized") == "world"
    lanes = []
    bids = list(BOUNDARY_IDS)
    seen_sides = set()
    for c in doc["curves"]:
        pts = np.asarray(c["control_points"], dtype=float)
        if world:
            pts = fov.to_normalized(pts)
        try:
            b = QuadBezier(*(tuple(float(v) for v in p) for p in pts))
        except ValueError as e:
            raise SchemaError(f"curve {c['id']}: {e}") from None
        if c.get("role", LANE) == BOUNDARY:
            side = _side_of(b)
            if side is None or side in seen_sides:
                raise SchemaError(f"boundary curve {c['id']} does not match a free FOV side")
            seen_sides.add(side)
            bids[side] = int(c["id"])
        else:
            lanes.append(LaneCurve(int(c["id"]), b))
    if seen_sides and len(seen_sides) != 4:
        raise SchemaError("boundary curves must list all four sides or none")
    conns = [tuple(p) for p in doc.get("incidence", [])]
    return LaneGraph(tuple(lanes), tuple(conns), fov, tuple(bids))


def graph_to_dict(g: LaneGraph, include_boundary: bool = True, metadata: dict | None = None) -> dict:
    curves = g.curves if include_boundary else g.lanes
    doc = {
        "version": GRAPH_VERSION,
        "frame": "normalized",
        "fov": _fov_dict(g.fov),
        "curves": [
            {"id": c.id, "role": c.role, "control_points": [list(p) for p in c.bezier.points]}
            for c in curves
        ],
        "incidence": [list(p) for p in g.connections],
    }
    if metadata:
        doc["metadata"] = metadata
    return doc


def load_graph(path) -> LaneGraph:
    return graph_from_dict(read_json(path))


def save_graph(g: LaneGraph, path, metadata: dict | None = None) -> None:
    write_text(path, dumps(graph_to_dict(g, metadata=metadata)))


# ---------------------------------------------------------------------------
# predictions


def prediction_from_dict(doc: dict) -> PredictionBundle:
    _check(doc, PREDICTION_SCHEMA, "prediction")
    fov = _fov_from(doc)
    world = doc.get("frame", "normalized") == "world"
    n = len(doc["curves"])
    q = np.array([c["control_points"] for c in doc["curves"]], dtype=float).reshape(n, 3, 2)
    r = np.array([c["center"] for c in doc["cycles"]], dtype=float).reshape(-1, 2)
    if world:
        q = fov.to_normalized(q)
        r = fov.to_normalized(r) if len(r) else r
    try:
        return PredictionBundle(
            q.reshape(n, 6),
            [c["prob"] for c in doc["curves"]],
            np.array(doc["connectivity"], dtype=float).reshape(n, n) if n else np.zeros((0, 0)),
            np.array([c["member_probs"] for c in doc["cycles"]], dtype=float),
            [c["prob"] for c in doc["cycles"]],
            r,
        )
    except ValueError as e:
        raise SchemaError(f"prediction: {e}") from None


def prediction_to_dict(p: PredictionBundle) -> dict:
    return {
        "version": PREDICTION_VERSION,
        "frame": "normalized",
        "curves": [
            {"control_points": p.Z_c_q[i].reshape(3, 2).tolist(), "prob": float(p.Z_c_p[i])}
            for i in range(p.n_curves)
        ],
        "connectivity": p.A_hat.tolist(),
        "cycles": [
            {"member_probs": p.Z_m_q[j].tolist(), "prob": float(p.Z_m_p[j]), "center": p.Z_m_r[j].tolist()}
            for j in range(p.n_cycles)
        ],
    }


def load_prediction(path) -> PredictionBundle:
    return prediction_from_dict(read_json(path))


# ---------------------------------------------------------------------------
# derived outputs


def _clean(x: float) -> float:
    return 0.0 if x == 0 else float(x)


def cycles_to_dict(arr: Arrangement) -> dict:
    return {
        "version": REPORT_VERSION,
        "n_points": len(arr.points),
        "n_segments": len(arr.segments),
        "cycles": [
            {
                "index": i,
                "cover": sorted(c.cover),
                "area": _clean(c.area),
                "centroid": [_clean(v) for v in c.centroid],
                "boundary": [list(b) for b in c.boundary],
            }
            for i, c in enumerate(arr.cycles)
        ],
    }
