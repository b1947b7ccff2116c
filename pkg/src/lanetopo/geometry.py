"""Quadratic Bezier primitives and robust pairwise intersection.

All coordinates live in the normalized FOV frame ``[0, 1]^2``. Curves are
directed: traffic flows from ``p0`` to ``p2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AssumptionViolation, ParameterError

GEOM_TOL = 1e-7
PARAM_TOL = 1e-9
# A contact region longer than this is an overlap, not a tangency.
OVERLAP_LENGTH = 1e-2
_MAX_DEPTH = 52

Point2 = tuple  # (x, y) floats


def _as_point(p) -> tuple[float, float]:
    x, y = p
    return (float(x), float(y))


@dataclass(frozen=True)
class QuadBezier:
    """Quadratic Bezier curve with control points ``p0, p1, p2``."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    p2: tuple[float, float]

    def __post_init__(self):
        pts = [_as_point(p) for p in (self.p0, self.p1, self.p2)]
        if not all(math.isfinite(c) for p in pts for c in p):
            raise ParameterError(f"non-finite control point in {pts}")
        if pts[0] == pts[1] == pts[2]:
            raise ParameterError("degenerate Bezier: all control points coincide")
        object.__setattr__(self, "p0", pts[0])
        object.__setattr__(self, "p1", pts[1])
        object.__setattr__(self, "p2", pts[2])

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "QuadBezier":
        v = [float(x) for x in values]
        if len(v) != 6:
            raise ParameterError(f"expected 6 values, got {len(v)}")
        return cls((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))

    @property
    def points(self):
        return (self.p0, self.p1, self.p2)

    def flat(self) -> tuple[float, ...]:
        return (*self.p0, *self.p1, *self.p2)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def point(self, t: float) -> tuple[float, float]:
        s = 1.0 - t
        a, b, c = s * s, 2.0 * t * s, t * t
        return (
            a * self.p0[0] + b * self.p1[0] + c * self.p2[0],
            a * self.p0[1] + b * self.p1[1] + c * self.p2[1],
        )

    def derivative(self, t: float) -> tuple[float, float]:
        s = 1.0 - t
        return (
            2.0 * (s * (self.p1[0] - self.p0[0]) + t * (self.p2[0] - self.p1[0])),
            2.0 * (s * (self.p1[1] - self.p0[1]) + t * (self.p2[1] - self.p1[1])),
        )

    def second_derivative(self) -> tuple[float, float]:
        return (
            2.0 * (self.p0[0] - 2.0 * self.p1[0] + self.p2[0]),
            2.0 * (self.p0[1] - 2.0 * self.p1[1] + self.p2[1]),
        )

    def blossom(self, u: float, v: float) -> tuple[float, float]:
        a = (1.0 - u) * (1.0 - v)
        b = (1.0 - u) * v + u * (1.0 - v)
        c = u * v
        return (
            a * self.p0[0] + b * self.p1[0] + c * self.p2[0],
            a * self.p0[1] + b * self.p1[1] + c * self.p2[1],
        )

    def restrict(self, t0: float, t1: float) -> "QuadBezier":
        """Exact sub-curve over ``[t0, t1]`` (reparameterized to ``[0, 1]``)."""
        return QuadBezier(self.point(t0), self.blossom(t0, t1), self.point(t1))

    def split(self, t: float) -> tuple["QuadBezier", "QuadBezier"]:
        """De Casteljau subdivision at ``t``; both halves share ``point(t)``."""
        if not 0.0 < t < 1.0:
            raise ParameterError(f"split parameter must be in (0, 1), got {t}")
        (x0, y0), (x1, y1), (x2, y2) = self.points
        ax, ay = x0 + t * (x1 - x0), y0 + t * (y1 - y0)
        bx, by = x1 + t * (x2 - x1), y1 + t * (y2 - y1)
        m = (ax + t * (bx - ax), ay + t * (by - ay))
        return QuadBezier(self.p0, (ax, ay), m), QuadBezier(m, (bx, by), self.p2)

    def reversed(self) -> "QuadBezier":
        return QuadBezier(self.p2, self.p1, self.p0)

    def tight_bbox(self) -> tuple[float, float, float, float]:
        """Exact axis-aligned bounds ``(xmin, ymin, xmax, ymax)``."""
        ts = [0.0, 1.0]
        for k in range(2):
            den = self.p0[k] - 2.0 * self.p1[k] + self.p2[k]
            if den != 0.0:
                t = (self.p0[k] - self.p1[k]) / den
                if 0.0 < t < 1.0:
                    ts.append(t)
        pts = [self.point(t) for t in ts]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return min(xs), min(ys), max(xs), max(ys)

    def curvature(self, t: float) -> float:
        dx, dy = self.derivative(t)
        ddx, ddy = self.second_derivative()
        n = math.hypot(dx, dy)
        if n == 0.0:
            return 0.0
        return (dx * ddy - dy * ddx) / n**3

    def length(self, n: int = 256) -> float:
        pts = sample_polyline(self, n)
        return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


class IntersectionHit(NamedTuple):
    t_a: float
    t_b: float
    pos: tuple[float, float]


def eval_bezier(curve: QuadBezier, t: float) -> tuple[float, float]:
    """Evaluate ``(1-t)^2 p0 + 2t(1-t) p1 + t^2 p2``."""
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"t must be in [0, 1], got {t}")
    return curve.point(t)


def eval_many(curve: QuadBezier, ts) -> np.ndarray:
    t = np.asarray(ts, dtype=float)[:, None]
    s = 1.0 - t
    p = curve.as_array()
    return s * s * p[0] + 2.0 * t * s * p[1] + t * t * p[2]


def sample_polyline(curve: QuadBezier, n: int) -> np.ndarray:
    """``n`` points at uniform parameter spacing, first ``p0`` and last ``p2``."""
    if n < 2:
        raise ParameterError(f"need at least 2 samples, got {n}")
    return eval_many(curve, np.linspace(0.0, 1.0, n))


def closest_param(curve: QuadBezier, p) -> tuple[float, float]:
    """Parameter of the point on ``curve`` nearest to ``p`` and its distance."""
    px, py = p
    (x0, y0), (x1, y1), (x2, y2) = curve.points
    ax, ay = x0 - 2.0 * x1 + x2, y0 - 2.0 * y1 + y2
    bx, by = 2.0 * (x1 - x0), 2.0 * (y1 - y0)
    dx, dy = x0 - px, y0 - py
    coeffs = [
        2.0 * (ax * ax + ay * ay),
        3.0 * (ax * bx + ay * by),
        bx * bx + by * by + 2.0 * (ax * dx + ay * dy),
        bx * dx + by * dy,
    ]
    cands = [0.0, 1.0]
    if any(coeffs):
        for r in np.roots(coeffs):
            if abs(r.imag) < 1e-7 and -1e-9 <= r.real <= 1.0 + 1e-9:
                cands.append(min(1.0, max(0.0, float(r.real))))
    best_t, best_d = 0.0, math.inf
    for t in cands:
        qx, qy = curve.point(t)
        d = math.hypot(qx - px, qy - py)
        if d < best_d:
            best_t, best_d = t, d
    return best_t, best_d


# ---------------------------------------------------------------------------
# subdivision intersection


def _flatness(c) -> float:
    # distance from the control point to the chord segment
    x0, y0, x1, y1, x2, y2 = c
    dx, dy = x2 - x0, y2 - y0
    ll = dx * dx + dy * dy
    if ll == 0.0:
        return math.hypot(x1 - x0, y1 - y0)
    u = ((x1 - x0) * dx + (y1 - y0) * dy) / ll
    u = 0.0 if u < 0.0 else (1.0 if u > 1.0 else u)
    return math.hypot(x0 + u * dx - x1, y0 + u * dy - y1)


def _halves(c):
    x0, y0, x1, y1, x2, y2 = c
    ax, ay = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    bx, by = 0.5 * (x1 + x2), 0.5 * (y1 + y2)
    mx, my = 0.5 * (ax + bx), 0.5 * (ay + by)
    return (x0, y0, ax, ay, mx, my), (mx, my, bx, by, x2, y2)


def _point_seg(px, py, x0, y0, x1, y1):
    dx, dy = x1 - x0, y1 - y0
    ll = dx * dx + dy * dy
    u = 0.0 if ll == 0.0 else ((px - x0) * dx + (py - y0) * dy) / ll
    u = 0.0 if u < 0.0 else (1.0 if u > 1.0 else u)
    return math.hypot(x0 + u * dx - px, y0 + u * dy - py), u


def _chord_hit(a, b, tol):
    """Chord-chord intersection parameters, or closest approach within tol."""
    ax0, ay0, ax1, ay1 = a[0], a[1], a[4], a[5]
    bx0, by0, bx1, by1 = b[0], b[1], b[4], b[5]
    d1x, d1y = ax1 - ax0, ay1 - ay0
    d2x, d2y = bx1 - bx0, by1 - by0
    den = d1x * d2y - d1y * d2x
    scale = math.hypot(d1x, d1y) * math.hypot(d2x, d2y)
    if scale > 0.0 and abs(den) > 1e-12 * scale:
        wx, wy = bx0 - ax0, by0 - ay0
        s = (wx * d2y - wy * d2x) / den
        u = (wx * d1y - wy * d1x) / den
        eps = 1e-9
        if -eps <= s <= 1.0 + eps and -eps <= u <= 1.0 + eps:
            return min(1.0, max(0.0, s)), min(1.0, max(0.0, u))
    cands = []
    d, u = _point_seg(ax0, ay0, bx0, by0, bx1, by1)
    cands.append((d, 0.0, u))
    d, u = _point_seg(ax1, ay1, bx0, by0, bx1, by1)
    cands.append((d, 1.0, u))
    d, s = _point_seg(bx0, by0, ax0, ay0, ax1, ay1)
    cands.append((d, s, 0.0))
    d, s = _point_seg(bx1, by1, ax0, ay0, ax1, ay1)
    cands.append((d, s, 1.0))
    best = min(cands)
    if best[0] <= tol:
        return best[1], best[2]
    return None


def _collect(a, ta0, ta1, b, tb0, tb1, tol, out, depth):
    axs, ays = (a[0], a[2], a[4]), (a[1], a[3], a[5])
    bxs, bys = (b[0], b[2], b[4]), (b[1], b[3], b[5])
    if (
        max(axs) + tol < min(bxs)
        or max(bxs) + tol < min(axs)
        or max(ays) + tol < min(bys)
        or max(bys) + tol < min(ays)
    ):
        return
    fa, fb = _flatness(a), _flatness(b)
    if (fa <= tol and fb <= tol) or depth >= _MAX_DEPTH:
        hit = _chord_hit(a, b, tol)
        if hit is not None:
            s, u = hit
            out.append((ta0 + s * (ta1 - ta0), tb0 + u * (tb1 - tb0)))
        return
    split_a = fb <= tol or (
        fa > tol and (max(axs) - min(axs) + max(ays) - min(ays))
        >= (max(bxs) - min(bxs) + max(bys) - min(bys))
    )
    if split_a:
        tm = 0.5 * (ta0 + ta1)
        l, r = _halves(a)
        _collect(l, ta0, tm, b, tb0, tb1, tol, out, depth + 1)
        _collect(r, tm, ta1, b, tb0, tb1, tol, out, depth + 1)
    else:
        tm = 0.5 * (tb0 + tb1)
        l, r = _halves(b)
        _collect(a, ta0, ta1, l, tb0, tm, tol, out, depth + 1)
        _collect(a, ta0, ta1, r, tm, tb1, tol, out, depth + 1)


def _residual(a: QuadBezier, b: QuadBezier, s: float, u: float) -> float:
    ax, ay = a.point(s)
    bx, by = b.point(u)
    return math.hypot(ax - bx, ay - by)


def _newton(a: QuadBezier, b: QuadBezier, s: float, u: float):
    best = (_residual(a, b, s, u), s, u)
    for _ in range(30):
        ax, ay = a.point(s)
        bx, by = b.point(u)
        fx, fy = ax - bx, ay - by
        dax, day = a.derivative(s)
        dbx, dby = b.derivative(u)
        det = dbx * day - dax * dby
        if abs(det) < 1e-14:
            break
        s = min(1.0, max(0.0, s + (fx * dby - dbx * fy) / det))
        u = min(1.0, max(0.0, u + (day * fx - dax * fy) / det))
        r = _residual(a, b, s, u)
        if r < best[0]:
            best = (r, s, u)
        if r < 1e-15:
            break
    return best


class _Contact(NamedTuple):
    t_a: float
    t_b: float
    pos: tuple[float, float]
    extent: float
    exact: bool


def _same_contact(a, b, h1, h2, tol) -> bool:
    if math.dist(h1[2], h2[2]) <= 10.0 * tol:
        return True
    # extended tangential contact: the curves stay together between the hits
    for f in (0.25, 0.5, 0.75):
        t = h1[0] + f * (h2[0] - h1[0])
        if closest_param(b, a.point(t))[1] > 10.0 * tol:
            return False
    return True


def _contacts(a: QuadBezier, b: QuadBezier, tol: float) -> list[_Contact]:
    raw: list[tuple[float, float, tuple[float, float], bool]] = []
    # endpoint contacts get exact parameter extremes
    for ta, pa in ((0.0, a.p0), (1.0, a.p2)):
        tb, d = closest_param(b, pa)
        if d < tol:
            if math.dist(b.p0, pa) < tol:
                tb = 0.0
            elif math.dist(b.p2, pa) < tol:
                tb = 1.0
            raw.append((ta, tb, pa, True))
    for tb, pb in ((0.0, b.p0), (1.0, b.p2)):
        ta, d = closest_param(a, pb)
        if d < tol:
            if math.dist(a.p0, pb) < tol or math.dist(a.p2, pb) < tol:
                continue  # already recorded from a's side
            raw.append((ta, tb, pb, True))
    found: list[tuple[float, float]] = []
    _collect(a.flat(), 0.0, 1.0, b.flat(), 0.0, 1.0, tol, found, 0)
    for s, u in found:
        r, s, u = _newton(a, b, s, u)
        pa, pb = a.point(s), b.point(u)
        raw.append((s, u, (0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])), False))
    if not raw:
        return []
    raw.sort(key=lambda h: (h[0], h[1]))
    groups = [[raw[0]]]
    for h in raw[1:]:
        if _same_contact(a, b, groups[-1][-1], h, tol):
            groups[-1].append(h)
        else:
            groups.append([h])
    # a contact spanning t_a = 1 and t_a = 0 cannot wrap, so runs are final
    out = []
    for grp in groups:
        extent = max(math.dist(p[2], q[2]) for p in grp for q in (grp[0], grp[-1]))
        exact = [h for h in grp if h[3]]
        if exact:
            rep = exact[0]
        else:
            rep = min(grp, key=lambda h: _residual(a, b, h[0], h[1]))
        out.append(_Contact(rep[0], rep[1], rep[2], extent, bool(exact)))
    return out


def intersect_all(a: QuadBezier, b: QuadBezier, tol: float = GEOM_TOL) -> list[IntersectionHit]:
    """Every geometrically distinct contact between ``a`` and ``b``.

    Overlapping stretches are reported by a single representative hit; use
    :func:`intersect_curves` when the at-most-once assumption must hold.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    return [IntersectionHit(c.t_a, c.t_b, c.pos) for c in _contacts(a, b, tol)]


def intersect_curves(
    a: QuadBezier, b: QuadBezier, tol: float = GEOM_TOL
) -> IntersectionHit | None:
    """The unique intersection of ``a`` and ``b``, if any.

    Raises:
        AssumptionViolation: ``kind="MultipleIntersections"`` when the curves
            meet more than once or overlap along a stretch.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    contacts = _contacts(a, b, tol)
    if len(contacts) > 1 or any(c.extent > OVERLAP_LENGTH for c in contacts):
        raise AssumptionViolation(
            "MultipleIntersections",
            f"curves meet {len(contacts)} times"
            + (" (overlap)" if any(c.extent > OVERLAP_LENGTH for c in contacts) else ""),
        )
    if not contacts:
        return None
    c = contacts[0]
    return IntersectionHit(c.t_a, c.t_b, c.pos)


def is_self_overlapping(curve: QuadBezier, tol: float = GEOM_TOL) -> bool:
    """True when the curve doubles back on itself (collinear, reversing)."""
    (x0, y0), (x1, y1), (x2, y2) = curve.points
    ux, uy = x1 - x0, y1 - y0
    vx, vy = x2 - x1, y2 - y1
    nu, nv = math.hypot(ux, uy), math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        return False
    cross = (ux * vy - uy * vx) / (nu * nv)
    dot = ux * vx + uy * vy
    return abs(cross) < 1e-9 and dot < 0.0
