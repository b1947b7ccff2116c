"""Deterministic synthetic scenes and structured perturbations.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``, so a seed
reproduces a scene on any platform that ships the same numpy bit generator.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .arrangement import Arrangement, build_arrangement
from .errors import (
    ArrangementError,
    AssumptionViolation,
    DeformationRejected,
    GenerationError,
    ParameterError,
)
from .geometry import GEOM_TOL, QuadBezier, intersect_all
from .lanegraph import (
    BOUNDARY,
    FovSpec,
    LaneCurve,
    LaneGraph,
    junction_groups,
    validate_graph,
)

RNG_NAME = "numpy.PCG64"
MAX_RETRIES = 100

# conditioning thresholds for generated and deformed scenes
MIN_POINT_SEPARATION = 2e-3
MIN_CROSSING_ANGLE = math.radians(3.0)
MIN_FACE_AREA = 1e-5

_SIDE_MARGIN = 0.1
_CTRL_BOX = (0.02, 0.98)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SceneParams:
    """Random scene knobs.

    ``min_lanes``/``max_lanes`` bound the number of through roads; splitting
    roads at turn-lane junctions raises the final lane count above that.
    ``curvature`` is the largest control-point offset from the chord midpoint.
    """

    seed: int = 0
    min_lanes: int = 2
    max_lanes: int = 5
    curvature: float = 0.15
    connection_prob: float = 0.4

    def __post_init__(self):
        if not (0 <= self.min_lanes <= self.max_lanes):
            raise ParameterError(f"bad lane range [{self.min_lanes}, {self.max_lanes}]")
        if not (0.0 <= self.curvature <= 0.45):
            raise ParameterError(f"curvature must lie in [0, 0.45], got {self.curvature}")
        if not (0.0 <= self.connection_prob <= 1.0):
            raise ParameterError(f"connection_prob must lie in [0, 1], got {self.connection_prob}")


def gen_grid(nx: int, ny: int, tol: float = GEOM_TOL, fov: FovSpec | None = None) -> LaneGraph:
    """``nx`` bottom-to-top and ``ny`` left-to-right straight lanes, evenly spaced.

    Vertical lanes get ids ``0..nx-1`` (left to right), horizontal ones
    ``nx..nx+ny-1`` (bottom to top).
    """
    if nx < 0 or ny < 0:
        raise ParameterError("grid sizes must be non-negative")
    for n in (nx, ny):
        if n and 1.0 / (n + 1) < 10.0 * tol:
            raise ParameterError(f"{n} lanes are closer than the merge radius {10 * tol:g}")
    beziers = []
    for i in range(nx):
        x = (i + 1) / (nx + 1)
        beziers.append(QuadBezier((x, 0.0), (x, 0.5), (x, 1.0)))
    for j in range(ny):
        y = (j + 1) / (ny + 1)
        beziers.append(QuadBezier((0.0, y), (0.5, y), (1.0, y)))
    return LaneGraph.from_beziers(beziers, fov=fov or FovSpec())


# ---------------------------------------------------------------------------
# conditioning


def conditioning_issues(
    g: LaneGraph,
    arr: Arrangement,
    min_sep: float = MIN_POINT_SEPARATION,
    min_angle: float = MIN_CROSSING_ANGLE,
    min_area: float = MIN_FACE_AREA,
) -> list[str]:
    """Reasons why ``arr`` is too close to degenerate for topology checks.

    Flags near-coincident vertices, grazing crossings between curves that are
    not directly connected, and sliver faces. Tiny perturbations of such
    scenes can flip the topology, which would make deformation trials
    meaningless.
    """
    issues = []
    pos = np.array([p.pos for p in arr.points])
    if len(pos) > 1:
        d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        d[np.diag_indices_from(d)] = np.inf
        if d.min() < min_sep:
            issues.append(f"vertices {d.min():.2e} apart")
    linked = set(g.connections) | {(y, x) for x, y in g.connections}
    bez = arr.beziers
    bset = set(g.boundary_ids)
    for p in arr.points:
        for (ca, ta), (cb, tb) in itertools.combinations(p.incident, 2):
            if (ca, cb) in linked or (ca in bset and cb in bset):
                continue
            da = np.array(bez[ca].derivative(ta))
            db = np.array(bez[cb].derivative(tb))
            na, nb = np.linalg.norm(da), np.linalg.norm(db)
            if na < 1e-12 or nb < 1e-12:
                issues.append(f"zero tangent at vertex {p.id}")
                continue
            ang = math.acos(min(1.0, abs(float(da @ db)) / (na * nb)))
            if ang < min_angle:
                issues.append(f"curves {ca},{cb} meet at {math.degrees(ang):.2f} deg")
    if arr.cycles and min(c.area for c in arr.cycles) < min_area:
        issues.append(f"sliver face of area {min(c.area for c in arr.cycles):.2e}")
    return issues


def screen(g: LaneGraph, tol: float = GEOM_TOL) -> tuple[Arrangement | None, list[str]]:
    """Validate, arrange and condition-check ``g``; returns ``(arr, reasons)``."""
    rep = validate_graph(g, tol)
    if not rep.ok:
        return None, sorted(rep.kinds())
    try:
        arr = build_arrangement(g, tol)
    except (ArrangementError, AssumptionViolation) as e:
        return None, [type(e).__name__]
    issues = conditioning_issues(g, arr)
    return (arr if not issues else None), issues


# ---------------------------------------------------------------------------
# random scenes


def _side_point(side: int, u: float) -> tuple[float, float]:
    return ((u, 0.0), (1.0, u), (1.0 - u, 1.0), (0.0, 1.0 - u))[side]


def _bent(p0, p2, offset: float) -> QuadBezier | None:
    a, b = np.asarray(p0), np.asarray(p2)
    mid = 0.5 * (a + b)
    chord = b - a
    perp = np.array([-chord[1], chord[0]]) / np.linalg.norm(chord)
    ctrl = mid + offset * perp
    lo, hi = _CTRL_BOX
    if not np.all((ctrl > lo) & (ctrl < hi)):
        return None
    return QuadBezier(tuple(a), tuple(ctrl), tuple(b))


def _random_road(rng: np.random.Generator, curvature: float) -> QuadBezier | None:
    s0, s1 = rng.choice(4, size=2, replace=False)
    u0, u1 = rng.uniform(_SIDE_MARGIN, 1.0 - _SIDE_MARGIN, size=2)
    offset = rng.uniform(-curvature, curvature) if curvature > 0 else 0.0
    return _bent(_side_point(int(s0), u0), _side_point(int(s1), u1), offset)


def _candidate(rng: np.random.Generator, p: SceneParams) -> LaneGraph | None:
    n_roads = int(rng.integers(p.min_lanes, p.max_lanes + 1))
    roads = []
    for _ in range(n_roads):
        r = _random_road(rng, p.curvature)
        if r is None:
            return None
        roads.append(r)

    # turn lanes: leave road a before a crossing and join road b after it
    splits: list[set[float]] = [set() for _ in roads]
    turns = []
    for a, b in itertools.combinations(range(len(roads)), 2):
        if rng.random() >= p.connection_prob:
            continue
        hits = intersect_all(roads[a], roads[b])
        if len(hits) != 1:
            continue
        if rng.random() < 0.5:
            a, b = b, a
            ta, tb = hits[0].t_b, hits[0].t_a
        else:
            ta, tb = hits[0].t_a, hits[0].t_b
        sa = ta - rng.uniform(0.1, 0.25)
        sb = tb + rng.uniform(0.1, 0.25)
        if not (0.05 < sa and sb < 0.95):
            continue
        lam = rng.uniform(0.4, 0.8) if p.curvature > 0 else 0.0
        splits[a].add(float(sa))
        splits[b].add(float(sb))
        turns.append((a, float(sa), b, float(sb), hits[0].pos, lam))

    lanes: list[QuadBezier] = []
    conns: list[tuple[int, int]] = []
    ends: dict[tuple[int, float], int] = {}    # (road, t) -> lane ending there
    starts: dict[tuple[int, float], int] = {}  # (road, t) -> lane starting there
    for r, road in enumerate(roads):
        cuts = [0.0] + sorted(splits[r]) + [1.0]
        prev = None
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            lid = len(lanes)
            lanes.append(road if (t0, t1) == (0.0, 1.0) else road.restrict(t0, t1))
            if prev is not None:
                conns.append((prev, lid))
            starts[(r, t0)] = lid
            ends[(r, t1)] = lid
            prev = lid
    for a, sa, b, sb, x, lam in turns:
        la, lb = ends[(a, sa)], starts[(b, sb)]
        p0, p2 = lanes[la].p2, lanes[lb].p0
        mid = 0.5 * (np.asarray(p0) + np.asarray(p2))
        ctrl = mid + lam * (np.asarray(x) - mid)
        tid = len(lanes)
        lanes.append(QuadBezier(p0, tuple(ctrl), p2))
        conns += [(la, tid), (tid, lb)]
    return LaneGraph.from_beziers(lanes, conns)


def gen_random_scene(params: SceneParams, tol: float = GEOM_TOL) -> LaneGraph:
    """Rejection-sample a valid, well-conditioned random scene.

    Raises:
        GenerationError: after ``MAX_RETRIES`` rejected candidates; the
            message tallies the rejection reasons.
    """
    rng = make_rng(params.seed)
    reasons: Counter = Counter()
    for _ in range(MAX_RETRIES):
        g = _candidate(rng, params)
        if g is None:
            reasons["control point outside box"] += 1
            continue
        arr, issues = screen(g, tol)
        if arr is not None:
            return g
        reasons.update(issues[:1])
    raise GenerationError(
        f"seed {params.seed}: no valid scene in {MAX_RETRIES} tries ({dict(reasons)})"
    )


# ---------------------------------------------------------------------------
# perturbations


def _on_side(p, tol) -> int | None:
    x, y = p
    for side, d in enumerate((y, 1.0 - x, 1.0 - y, x)):
        if abs(d) <= 10.0 * tol:
            return side
    return None


def _move(p, side, off):
    x, y = p
    if side is None:
        return (float(np.clip(x + off[0], 0.0, 1.0)), float(np.clip(y + off[1], 0.0, 1.0)))
    # slide along the side it sits on
    if side in (0, 2):
        return (float(np.clip(x + off[0], 0.0, 1.0)), y)
    return (x, float(np.clip(y + off[1], 0.0, 1.0)))


def deform(
    g: LaneGraph,
    magnitude: float,
    seed,
    tol: float = GEOM_TOL,
    check: bool = True,
) -> LaneGraph:
    """Jitter every control point by at most ``magnitude`` per coordinate.

    Interior control points move freely; endpoints shared by a junction move
    together, and endpoints on the FOV boundary slide along their side.

    Raises:
        DeformationRejected: the result fails validation or conditioning
            (only when ``check`` is set).
    """
    if not (magnitude >= 0 and math.isfinite(magnitude)):
        raise ParameterError(f"magnitude must be finite and >= 0, got {magnitude}")
    if magnitude == 0:
        return g
    rng = make_rng(seed)
    pts = {c.id: list(c.bezier.points) for c in g.lanes}
    grouped = set()
    for grp in junction_groups(g):
        p = pts[grp[0][0]][grp[0][1]]
        q = _move(p, _on_side(p, tol), rng.uniform(-magnitude, magnitude, 2))
        for lid, k in grp:
            pts[lid][k] = q
            grouped.add((lid, k))
    for c in g.lanes:
        for k in (0, 2):
            if (c.id, k) not in grouped:
                p = pts[c.id][k]
                pts[c.id][k] = _move(p, _on_side(p, tol), rng.uniform(-magnitude, magnitude, 2))
        p1 = np.asarray(pts[c.id][1]) + rng.uniform(-magnitude, magnitude, 2)
        pts[c.id][1] = tuple(float(v) for v in np.clip(p1, 0.0, 1.0))
    try:
        lanes = [LaneCurve(c.id, QuadBezier(*pts[c.id])) for c in g.lanes]
    except ParameterError as e:
        raise DeformationRejected(str(e)) from e
    out = g.with_lanes(lanes)
    if check:
        arr, issues = screen(out, tol)
        if arr is None:
            raise DeformationRejected("; ".join(issues))
    return out


def fragment(g: LaneGraph, c: int, t: float = 0.5) -> LaneGraph:
    """Split lane ``c`` at ``t`` into two connected lanes.

    The first piece keeps id ``c``, the second gets ``max(lane ids) + 1`` and
    inherits the outgoing connections of ``c``.
    """
    if not (0.0 < t < 1.0):
        raise ParameterError(f"split parameter must lie in (0, 1), got {t}")
    lane = g.lane(c)
    first, second = lane.bezier.split(t)
    new_id = max(g.lane_ids) + 1
    lanes = []
    for x in g.lanes:
        if x.id == c:
            lanes += [LaneCurve(c, first), LaneCurve(new_id, second)]
        else:
            lanes.append(x)
    conns = [(new_id if x == c else x, y) for x, y in g.connections] + [(c, new_id)]
    return g.with_lanes(lanes, conns)


def _aligned(new: QuadBezier, old: QuadBezier) -> QuadBezier:
    """``new`` or its reverse, whichever runs in the same sense as ``old``."""
    same = math.dist(new.p0, old.p0) + math.dist(new.p2, old.p2)
    flip = math.dist(new.p2, old.p0) + math.dist(new.p0, old.p2)
    return new if same <= flip else new.reversed()


def crossing_swap(g: LaneGraph, a: int, b: int) -> LaneGraph:
    """Exchange the paths of two unconnected lanes, keeping ids and traffic sense.

    Each lane takes over the other's path, reversed if that keeps its start
    nearer its old start. A bare geometry exchange between opposing lanes
    would reverse traffic, which no deformation can do.
    """
    if a == b:
        raise ParameterError("need two distinct lanes")
    touched = {x for pair in g.connections for x in pair}
    if a in touched or b in touched:
        raise ParameterError("crossing_swap needs lanes without connections")
    ga, gb = g.lane(a).bezier, g.lane(b).bezier
    new = {a: _aligned(gb, ga), b: _aligned(ga, gb)}
    lanes = [LaneCurve(x.id, new.get(x.id, x.bezier)) for x in g.lanes]
    return g.with_lanes(lanes)


def free_lanes(g: LaneGraph) -> list[int]:
    """Lanes without any connection (candidates for ``crossing_swap``)."""
    touched = {x for pair in g.connections for x in pair}
    return [i for i in g.lane_ids if i not in touched]


def scene_metadata(params: SceneParams) -> dict:
    return {
        "generator": "gen_random_scene",
        "rng": RNG_NAME,
        "seed": params.seed,
        "min_lanes": params.min_lanes,
        "max_lanes": params.max_lanes,
        "curvature": params.curvature,
        "connection_prob": params.connection_prob,
    }


__all__ = [
    "BOUNDARY",
    "MAX_RETRIES",
    "RNG_NAME",
    "SceneParams",
    "conditioning_issues",
    "crossing_swap",
    "deform",
    "fragment",
    "free_lanes",
    "gen_grid",
    "gen_random_scene",
    "make_rng",
    "scene_metadata",
    "screen",
]
