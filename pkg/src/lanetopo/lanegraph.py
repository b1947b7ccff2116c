"""Directed lane graph: centerlines, incidence, FOV boundary, validation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AssumptionViolation, StructureError
from .geometry import GEOM_TOL, QuadBezier, intersect_curves, is_self_overlapping

LANE = "lane"
BOUNDARY = "boundary"

# Boundary sides in counter-clockwise order.
BOTTOM, RIGHT, TOP, LEFT = range(4)
SIDE_NAMES = ("bottom", "right", "top", "left")
BOUNDARY_IDS = (-1, -2, -3, -4)
K_BOUNDARY = 4

INCIDENCE_TOL = 1e-4

_CORNERS = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


def boundary_bezier(side: int) -> QuadBezier:
    a, b = _CORNERS[side], _CORNERS[(side + 1) % 4]
    mid = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
    return QuadBezier(a, mid, b)


@dataclass(frozen=True)
class FovSpec:
    """Bird's-eye-view region in meters; curves are stored normalized."""

    x_min: float = -25.0
    x_max: float = 25.0
    z_min: float = 1.0
    z_max: float = 50.0
    resolution: float = 0.25

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.z_max > self.z_min):
            raise StructureError(f"degenerate FOV ranges: {self}")
        if not self.resolution > 0:
            raise StructureError(f"resolution must be positive, got {self.resolution}")

    def to_normalized(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float)
        return np.stack(
            [(p[..., 0] - self.x_min) / (self.x_max - self.x_min),
             (p[..., 1] - self.z_min) / (self.z_max - self.z_min)],
            axis=-1,
        )

    def to_world(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float)
        return np.stack(
            [self.x_min + p[..., 0] * (self.x_max - self.x_min),
             self.z_min + p[..., 1] * (self.z_max - self.z_min)],
            axis=-1,
        )


@dataclass(frozen=True)
class LaneCurve:
    id: int
    bezier: QuadBezier
    role: str = LANE


@dataclass(frozen=True)
class LaneGraph:
    """Lane centerlines plus connections ``(from_id, to_id)``.

    ``A[x, y] = 1`` iff the end of lane ``x`` is the start of lane ``y``.
    The four FOV boundary curves are implicit and carry ``boundary_ids`` in
    side order bottom, right, top, left.
    """

    lanes: tuple[LaneCurve, ...]
    connections: tuple[tuple[int, int], ...] = ()
    fov: FovSpec = field(default_factory=FovSpec)
    boundary_ids: tuple[int, int, int, int] = BOUNDARY_IDS

    def __post_init__(self):
        lanes = tuple(self.lanes)
        object.__setattr__(self, "lanes", lanes)
        ids = [c.id for c in lanes]
        if len(set(ids)) != len(ids):
            raise StructureError(f"duplicate lane ids in {ids}")
        if any(c.role != LANE for c in lanes):
            raise StructureError("lanes must have role 'lane'")
        bids = tuple(int(b) for b in self.boundary_ids)
        if len(bids) != K_BOUNDARY or len(set(bids)) != K_BOUNDARY:
            raise StructureError(f"need {K_BOUNDARY} distinct boundary ids")
        if set(bids) & set(ids):
            raise StructureError("boundary ids collide with lane ids")
        object.__setattr__(self, "boundary_ids", bids)
        known = set(ids)
        conns = sorted({(int(x), int(y)) for x, y in self.connections})
        for x, y in conns:
            if x not in known or y not in known:
                raise StructureError(f"incidence references missing id in {(x, y)}")
            if x == y:
                raise StructureError(f"self-connection on lane {x}")
        object.__setattr__(self, "connections", tuple(conns))

    @classmethod
    def from_beziers(cls, beziers: Sequence[QuadBezier], connections=(), **kw) -> "LaneGraph":
        return cls(tuple(LaneCurve(i, b) for i, b in enumerate(beziers)), tuple(connections), **kw)

    @classmethod
    def from_matrix(cls, lanes: Sequence[LaneCurve], incidence, **kw) -> "LaneGraph":
        a = np.asarray(incidence, dtype=bool)
        n = len(lanes)
        if a.shape != (n, n):
            raise StructureError(f"incidence shape {a.shape} != {(n, n)}")
        conns = [(lanes[i].id, lanes[j].id) for i, j in zip(*np.nonzero(a))]
        return cls(tuple(lanes), tuple(conns), **kw)

    @property
    def n_lanes(self) -> int:
        return len(self.lanes)

    @property
    def lane_ids(self) -> tuple[int, ...]:
        return tuple(c.id for c in self.lanes)

    @property
    def boundaries(self) -> tuple[LaneCurve, ...]:
        return tuple(
            LaneCurve(bid, boundary_bezier(side), BOUNDARY)
            for side, bid in enumerate(self.boundary_ids)
        )

    @property
    def curves(self) -> tuple[LaneCurve, ...]:
        """Lanes followed by boundaries: the column order of cover matrices."""
        return self.lanes + self.boundaries

    @property
    def curve_ids(self) -> tuple[int, ...]:
        return tuple(c.id for c in self.curves)

    def lane(self, cid: int) -> LaneCurve:
        for c in self.lanes:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def index_of(self, cid: int) -> int:
        """Column index of a curve id (lanes first, then boundary sides)."""
        return self.curve_ids.index(cid)

    @property
    def incidence(self) -> np.ndarray:
        idx = {cid: i for i, cid in enumerate(self.lane_ids)}
        a = np.zeros((self.n_lanes, self.n_lanes), dtype=bool)
        for x, y in self.connections:
            a[idx[x], idx[y]] = True
        return a

    def successors(self, cid: int) -> list[int]:
        return [y for x, y in self.connections if x == cid]

    def predecessors(self, cid: int) -> list[int]:
        return [x for x, y in self.connections if y == cid]

    def control_array(self) -> np.ndarray:
        """``N x 6`` control points, one row per lane."""
        return np.array([c.bezier.flat() for c in self.lanes], dtype=float).reshape(-1, 6)

    def with_lanes(self, lanes, connections=None) -> "LaneGraph":
        return LaneGraph(
            tuple(lanes),
            self.connections if connections is None else tuple(connections),
            self.fov,
            self.boundary_ids,
        )


def boundary_only(fov: FovSpec | None = None) -> LaneGraph:
    return LaneGraph((), (), fov or FovSpec())


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    """One failed check. ``assumption`` names the check that failed."""

    assumption: str
    kind: str
    curves: tuple[int, ...]
    message: str

    def to_dict(self) -> dict:
        return {
            "assumption": self.assumption,
            "kind": self.kind,
            "curves": list(self.curves),
            "message": self.message,
        }


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def distance_to_fov_boundary(p) -> float:
    x, y = p
    inside = min(x, 1.0 - x, y, 1.0 - y)
    if inside >= 0.0:
        return inside
    # outside the square: euclidean distance to it
    dx = max(-x, 0.0, x - 1.0)
    dy = max(-y, 0.0, y - 1.0)
    return math.hypot(dx, dy)


def _junction_groups(g: LaneGraph) -> list[list[tuple[int, int]]]:
    """Endpoint slots ``(lane_id, 0|2)`` joined through the incidence relation."""
    parent: dict[tuple[int, int], tuple[int, int]] = {}

    def find(k):
        while parent.setdefault(k, k) != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for x, y in g.connections:
        ra, rb = find((x, 2)), find((y, 0))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for k in list(parent):
        groups.setdefault(find(k), []).append(k)
    return [sorted(v) for _, v in sorted(groups.items())]


def _endpoint(g: LaneGraph, slot: tuple[int, int]):
    b = g.lane(slot[0]).bezier
    return b.p0 if slot[1] == 0 else b.p2


def validate_graph(g: LaneGraph, tol: float = GEOM_TOL) -> ValidationReport:
    """Check incidence consistency, FOV containment and assumptions 1-3.

    Violations are collected, never raised.
    """
    out: list[Violation] = []
    for c in g.lanes:
        x0, y0, x1, y1 = c.bezier.tight_bbox()
        if x0 < -tol or y0 < -tol or x1 > 1.0 + tol or y1 > 1.0 + tol:
            out.append(Violation("fov", "OutsideFov", (c.id,), f"lane {c.id} leaves the FOV"))
        if is_self_overlapping(c.bezier):
            out.append(Violation("A2", "SelfIntersection", (c.id,), f"lane {c.id} doubles back on itself"))
    for x, y in g.connections:
        gap = math.dist(g.lane(x).bezier.p2, g.lane(y).bezier.p0)
        if gap > INCIDENCE_TOL:
            out.append(Violation("incidence", "IncidenceGap", (x, y),
                                 f"end of {x} and start of {y} are {gap:.3g} apart"))
    curves = g.curves
    for ca, cb in itertools.combinations(curves, 2):
        if ca.role == BOUNDARY and cb.role == BOUNDARY:
            continue
        try:
            intersect_curves(ca.bezier, cb.bezier, tol)
        except AssumptionViolation as e:
            out.append(Violation("A1", e.kind, (ca.id, cb.id), str(e)))
    has_pred = {y for _, y in g.connections}
    has_succ = {x for x, _ in g.connections}
    for c in g.lanes:
        for slot, connected in ((0, c.id in has_pred), (2, c.id in has_succ)):
            if connected:
                continue
            p = c.bezier.p0 if slot == 0 else c.bezier.p2
            if distance_to_fov_boundary(p) > 10.0 * tol:
                where = "start" if slot == 0 else "end"
                out.append(Violation("A3", "Floating", (c.id,),
                                     f"{where} of lane {c.id} neither connects nor meets the boundary"))
    return ValidationReport(tuple(out))


def _mean_point(pts) -> tuple[float, float]:
    if all(p == pts[0] for p in pts):
        return pts[0]
    return (math.fsum(p[0] for p in pts) / len(pts), math.fsum(p[1] for p in pts) / len(pts))


def merge_connected(g: LaneGraph) -> LaneGraph:
    """Snap connected endpoints together.

    Every junction (endpoints linked through the incidence relation) moves to
    the mean of its endpoints; for a single connection that is the midpoint.
    Coincident junctions are left bit-identical.
    """
    moved: dict[tuple[int, int], tuple[float, float]] = {}
    for grp in _junction_groups(g):
        target = _mean_point([_endpoint(g, s) for s in grp])
        for s in grp:
            moved[s] = target
    lanes = []
    for c in g.lanes:
        b = c.bezier
        p0 = moved.get((c.id, 0), b.p0)
        p2 = moved.get((c.id, 2), b.p2)
        if p0 != b.p0 or p2 != b.p2:
            c = LaneCurve(c.id, QuadBezier(p0, b.p1, p2), c.role)
        lanes.append(c)
    return g.with_lanes(lanes)


def junction_groups(g: LaneGraph) -> list[list[tuple[int, int]]]:
    return _junction_groups(g)

