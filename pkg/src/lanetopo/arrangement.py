"""Planar arrangement of lane and boundary curves, and its minimal cycles.

Every pairwise contact becomes a vertex, every curve piece between two
consecutive vertices a segment, and the bounded faces of the resulting planar
subdivision are the minimal cycles. Faces are traced on a half-edge structure
whose outgoing edges are sorted by departure angle around each vertex.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArrangementError, AssumptionViolation, ParameterError
from .geometry import GEOM_TOL, QuadBezier, eval_many, intersect_all, intersect_curves
from .lanegraph import BOUNDARY, LaneGraph, merge_connected

DEFAULT_SAMPLES = 100
_ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class IntersectionPoint:
    id: int
    pos: tuple[float, float]
    incident: tuple[tuple[int, float], ...]  # (curve id, parameter), by curve id

    @property
    def curve_ids(self) -> tuple[int, ...]:
        return tuple(c for c, _ in self.incident)


@dataclass(frozen=True)
class IntersectionOrder:
    curve: int
    sequence: tuple[int, ...]  # point ids along the traffic direction
    params: tuple[float, ...]


@dataclass(frozen=True)
class Segment:
    id: int
    curve: int
    from_pt: int
    to_pt: int
    t_range: tuple[float, float]


@dataclass(frozen=True)
class MinimalCycle:
    boundary: tuple[tuple[int, int], ...]  # (segment id, +1 forward | -1 backward)
    cover: frozenset
    area: float
    centroid: tuple[float, float]
    polygon: np.ndarray = field(compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class Arrangement:
    graph: LaneGraph
    points: tuple[IntersectionPoint, ...]
    orders: dict
    segments: tuple[Segment, ...]
    cycles: tuple[MinimalCycle, ...] = ()
    tol: float = GEOM_TOL
    samples: int = DEFAULT_SAMPLES
    notes: tuple[str, ...] = ()

    @property
    def beziers(self) -> dict[int, QuadBezier]:
        return {c.id: c.bezier for c in self.graph.curves}

    def cover_matrix(self) -> np.ndarray:
        """``M x (N + K)`` boolean covers, columns in ``graph.curves`` order."""
        cols = {cid: i for i, cid in enumerate(self.graph.curve_ids)}
        out = np.zeros((len(self.cycles), len(cols)), dtype=bool)
        for r, cyc in enumerate(self.cycles):
            for cid in cyc.cover:
                out[r, cols[cid]] = True
        return out


# ---------------------------------------------------------------------------
# intersection points, orders, segments


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _pair_hits(g: LaneGraph, tol: float, strict: bool, notes: list):
    curves = g.curves
    bids = g.boundary_ids
    hits = []  # (pos, ((cid, t), (cid, t)))
    for side in range(4):
        nxt = (side + 1) % 4
        corner = g.boundaries[side].bezier.p2
        hits.append((corner, ((bids[side], 1.0), (bids[nxt], 0.0))))
    for ca, cb in itertools.combinations(curves, 2):
        if ca.role == BOUNDARY and cb.role == BOUNDARY:
            continue
        if strict:
            try:
                h = intersect_curves(ca.bezier, cb.bezier, tol)
            except AssumptionViolation as e:
                raise AssumptionViolation(e.kind, f"curves {ca.id} and {cb.id}: {e}", (ca.id, cb.id))
            found = [] if h is None else [h]
        else:
            found = intersect_all(ca.bezier, cb.bezier, tol)
            if len(found) > 1:
                notes.append(f"curves {ca.id} and {cb.id} meet {len(found)} times")
        for h in found:
            hits.append((h.pos, ((ca.id, h.t_a), (cb.id, h.t_b))))
    return hits


def _pick_param(ts: list[float]) -> float:
    for t in ts:
        if t == 0.0 or t == 1.0:
            return t
    return math.fsum(ts) / len(ts)


def compute_arrangement(
    g: LaneGraph,
    tol: float = GEOM_TOL,
    *,
    strict: bool = True,
    samples: int = DEFAULT_SAMPLES,
) -> Arrangement:
    """Intersection points, per-curve orders and segments of ``g``.

    Connected endpoints are snapped together first (a no-op for graphs whose
    junctions already coincide). With ``strict=False`` repeated contacts and
    floating endpoints are tolerated, which is what estimated graphs need:
    floating ends become degree-one vertices and curve groups that never reach
    the FOV boundary are dropped.

    Raises:
        AssumptionViolation: strict mode only, for repeated contacts or a
            lane end that is not a vertex.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if samples < 2:
        raise ParameterError(f"samples must be >= 2, got {samples}")
    if g.connections:
        g = merge_connected(g)
    notes: list[str] = []
    hits = _pair_hits(g, tol, strict, notes)

    # lane endpoints that are not a contact: floating
    bez = {c.id: c.bezier for c in g.curves}
    touched: dict[int, set] = {}
    for _, inc in hits:
        for cid, t in inc:
            touched.setdefault(cid, set()).add(t)
    for c in g.lanes:
        for t, p in ((0.0, c.bezier.p0), (1.0, c.bezier.p2)):
            if t in touched.get(c.id, ()):
                continue
            if strict:
                raise AssumptionViolation("Floating", f"lane {c.id} has a floating end at t={t}", (c.id,))
            notes.append(f"lane {c.id} has a floating end at t={t}")
            hits.append((p, ((c.id, t),)))

    # merge hits closer than the merge radius into vertices
    pos = np.array([h[0] for h in hits], dtype=float)
    uf = _UnionFind(len(hits))
    radius = 10.0 * tol
    d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1)
    for i, j in zip(*np.nonzero(np.triu(d2 <= radius * radius, 1))):
        uf.union(int(i), int(j))
    clusters: dict[int, list[int]] = {}
    for i in range(len(hits)):
        clusters.setdefault(uf.find(i), []).append(i)

    raw = []
    for members in clusters.values():
        per_curve: dict[int, list[float]] = {}
        for i in members:
            for cid, t in hits[i][1]:
                per_curve.setdefault(cid, []).append(t)
        incident = tuple(sorted((cid, _pick_param(ts)) for cid, ts in per_curve.items()))
        exact = [bez[cid].point(t) for cid, t in incident if t in (0.0, 1.0)]
        if exact:
            p = exact[0]
        else:
            p = (float(pos[members, 0].mean()), float(pos[members, 1].mean()))
        raw.append((p, incident))

    # curve orders over raw vertices
    seq: dict[int, list[tuple[float, int]]] = {cid: [] for cid in g.curve_ids}
    for k, (_, incident) in enumerate(raw):
        for cid, t in incident:
            seq[cid].append((t, k))
    raw_segments = []
    for cid in g.curve_ids:
        entries = sorted(seq[cid])
        for (ta, ka), (tb, kb) in zip(entries, entries[1:]):
            if ka == kb or tb - ta <= 0.0:
                raise ArrangementError(f"curve {cid} visits a vertex twice")
            raw_segments.append((cid, ka, kb, ta, tb))

    keep = set(range(len(raw)))
    if not strict:
        keep = _boundary_component(g, raw, raw_segments)
        dropped = len(raw) - len(keep)
        if dropped:
            notes.append(f"dropped {dropped} vertices not connected to the FOV boundary")

    order = sorted(keep, key=lambda k: (raw[k][0][0], raw[k][0][1], raw[k][1]))
    new_id = {k: i for i, k in enumerate(order)}
    points = tuple(IntersectionPoint(new_id[k], raw[k][0], raw[k][1]) for k in order)
    orders = {}
    for cid in g.curve_ids:
        entries = sorted((t, new_id[k]) for t, k in seq[cid] if k in keep)
        orders[cid] = IntersectionOrder(cid, tuple(k for _, k in entries), tuple(t for t, _ in entries))
    segments = []
    for cid, ka, kb, ta, tb in raw_segments:
        if ka in keep and kb in keep:
            segments.append(Segment(len(segments), cid, new_id[ka], new_id[kb], (ta, tb)))
    return Arrangement(g, points, orders, tuple(segments), (), tol, samples, tuple(notes))


def _boundary_component(g, raw, raw_segments) -> set:
    bset = set(g.boundary_ids)
    adj: dict[int, set] = {k: set() for k in range(len(raw))}
    for _, ka, kb, _, _ in raw_segments:
        adj[ka].add(kb)
        adj[kb].add(ka)
    start = [k for k, (_, inc) in enumerate(raw) if any(cid in bset for cid, _ in inc)]
    seen = set(start)
    stack = list(start)
    while stack:
        k = stack.pop()
        for j in adj[k]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


# ---------------------------------------------------------------------------
# face tracing


def _departure(curve: QuadBezier, t0: float, t1: float):
    """Unit-free departure angle and signed curvature leaving ``t0`` toward ``t1``."""
    sign = 1.0 if t1 > t0 else -1.0
    dx, dy = curve.derivative(t0)
    if math.hypot(dx, dy) < 1e-12:
        # zero velocity at a cusp-free endpoint: use a short chord instead
        a = curve.point(t0)
        b = curve.point(t0 + 1e-6 * (t1 - t0))
        dx, dy = sign * (b[0] - a[0]), sign * (b[1] - a[1])
    dx, dy = sign * dx + 0.0, sign * dy + 0.0
    return math.atan2(dy, dx), sign * curve.curvature(t0)


def _compare(a, b):
    # a, b: (angle, curvature, curve id, half-edge id)
    if abs(a[0] - b[0]) > _ANGLE_EPS:
        return -1 if a[0] < b[0] else 1
    for k in (1, 2, 3):
        if a[k] != b[k]:
            return -1 if a[k] < b[k] else 1
    return 0


def _polygon_area_centroid(poly: np.ndarray):
    x, y = poly[:, 0], poly[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cross = x * ys - xs * y
    area = 0.5 * float(math.fsum(cross))
    if area == 0.0:
        return 0.0, (float(x.mean()), float(y.mean()))
    cx = float(np.sum((x + xs) * cross)) / (6.0 * area)
    cy = float(np.sum((y + ys) * cross)) / (6.0 * area)
    return area, (cx, cy)


def extract_minimal_cycles(arr: Arrangement) -> Arrangement:
    """Trace the faces of ``arr`` and return a copy with ``cycles`` filled in.

    Raises:
        ArrangementError: when the half-edge structure is inconsistent, which
            points at a tolerance failure upstream.
    """
    bez = arr.beziers
    segs = arr.segments
    n_he = 2 * len(segs)
    origin = [0] * n_he
    outgoing: dict[int, list] = {p.id: [] for p in arr.points}
    for s in segs:
        t0, t1 = s.t_range
        c = bez[s.curve]
        for he, (v, ta, tb) in ((2 * s.id, (s.from_pt, t0, t1)), (2 * s.id + 1, (s.to_pt, t1, t0))):
            origin[he] = v
            ang, kap = _departure(c, ta, tb)
            outgoing[v].append((ang, kap, s.curve, he))
    slot = [0] * n_he
    ring: dict[int, list[int]] = {}
    for v, lst in outgoing.items():
        lst.sort(key=functools.cmp_to_key(_compare))
        ring[v] = [e[3] for e in lst]
        for i, he in enumerate(ring[v]):
            slot[he] = i

    def nxt(he: int) -> int:
        twin = he ^ 1
        v = origin[twin]
        r = ring[v]
        return r[(slot[twin] - 1) % len(r)]

    polylines = {}
    for s in segs:
        polylines[s.id] = eval_many(bez[s.curve], np.linspace(s.t_range[0], s.t_range[1], arr.samples))

    seen = [False] * n_he
    faces = []
    for start in range(n_he):
        if seen[start]:
            continue
        loop = []
        he = start
        while not seen[he]:
            seen[he] = True
            loop.append(he)
            he = nxt(he)
            if len(loop) > n_he:
                raise ArrangementError("face trace did not close")
        if he != start:
            raise ArrangementError("half-edge next pointers are not a permutation")
        faces.append(loop)

    traced = []
    for loop in faces:
        parts = []
        for he in loop:
            pl = polylines[he >> 1]
            parts.append(pl[:-1] if he % 2 == 0 else pl[::-1][:-1])
        poly = np.concatenate(parts, axis=0)
        area, cen = _polygon_area_centroid(poly)
        traced.append((loop, poly, area, cen))

    outer = [f for f in traced if f[2] <= 0.0]
    if len(outer) != 1:
        raise ArrangementError(f"expected one outer face, found {len(outer)}")
    n_v, n_e, n_f = len(arr.points), len(segs), len(traced)
    if n_v - n_e + n_f != 2:
        raise ArrangementError(f"Euler characteristic V-E+F = {n_v - n_e + n_f}, expected 2")

    cycles = []
    for loop, poly, area, cen in traced:
        if area <= 0.0:
            continue
        boundary = tuple((he >> 1, 1 if he % 2 == 0 else -1) for he in loop)
        cover = frozenset(segs[s].curve for s, _ in boundary)
        cycles.append(MinimalCycle(boundary, cover, area, cen, poly))
    cycles.sort(key=lambda c: (c.centroid[1], c.centroid[0]))
    return replace(arr, cycles=tuple(cycles))


def build_arrangement(g: LaneGraph, tol: float = GEOM_TOL, **kw) -> Arrangement:
    """``compute_arrangement`` followed by ``extract_minimal_cycles``."""
    return extract_minimal_cycles(compute_arrangement(g, tol, **kw))


def intersection_order_tokens(arr: Arrangement, c: int) -> list[tuple[int, ...]]:
    """For each vertex along curve ``c``: the sorted ids of the other curves there."""
    if c not in arr.orders:
        raise KeyError(f"unknown curve id {c}")
    pts = arr.points
    return [tuple(cid for cid in pts[k].curve_ids if cid != c) for k in arr.orders[c].sequence]


def check_invariants(arr: Arrangement) -> dict:
    """Partition, Euler and edge-face incidence checks on an extracted arrangement."""
    total = math.fsum(c.area for c in arr.cycles)
    faces_per_segment: dict[int, int] = {s.id: 0 for s in arr.segments}
    repeats = 0
    for cyc in arr.cycles:
        for sid, _ in cyc.boundary:
            faces_per_segment[sid] += 1
        runs = [arr.segments[sid].curve for sid, _ in cyc.boundary]
        # collapse cyclic runs of the same curve; a curve may appear in one run only
        collapsed = [cid for i, cid in enumerate(runs) if cid != runs[i - 1]] or runs[:1]
        repeats += len(collapsed) - len(set(collapsed))
    bset = set(arr.graph.boundary_ids)
    bad_edges = [
        s.id for s in arr.segments
        if faces_per_segment[s.id] != (1 if s.curve in bset else 2)
    ]
    return {
        "area_sum": total,
        "partition_error": abs(total - 1.0),
        "euler": len(arr.points) - len(arr.segments) + len(arr.cycles) + 1,
        "bad_edge_face_incidence": bad_edges,
        "assumption4_repeats": repeats,
        "min_cover_size": min((len(c.cover) for c in arr.cycles), default=0),
    }
