"""Assignment machinery: Hungarian solver, min matching and cycle matching."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .geometry import QuadBezier
from .lanegraph import K_BOUNDARY

SUPPORT_SAMPLES = 17
SUPPORT_RESOLUTION = 64
MATCH_COSTS = ("support", "control_l1")


def hungarian(cost) -> tuple[list[tuple[int, int]], float]:
    """Minimum-cost assignment of size ``min(rows, cols)``.

    Shortest augmenting path with dual potentials (O(n^2 m)). Rectangular
    inputs are solved directly on the smaller side, so no sentinel padding
    enters the arithmetic.

    Returns:
        ``(pairs, total)`` with pairs ``(row, col)`` sorted by row and the
        total computed with ``math.fsum`` over the selected entries.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2:
        raise ParameterError(f"cost must be 2-D, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ParameterError("cost matrix has NaN or infinite entries")
    n_rows, n_cols = c.shape
    if n_rows == 0 or n_cols == 0:
        return [], 0.0
    transposed = n_rows > n_cols
    a = c.T if transposed else c
    n, m = a.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j]: row (1-based) assigned to column j
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    pairs = [(int(p[j]) - 1, j - 1) for j in range(1, m + 1) if p[j] != 0]
    if transposed:
        pairs = [(col, row) for row, col in pairs]
    pairs.sort()
    total = math.fsum(float(c[r, k]) for r, k in pairs)
    return pairs, total


def _as_controls(curves) -> np.ndarray:
    if isinstance(curves, np.ndarray):
        return curves.reshape(-1, 6).astype(float)
    rows = [c.flat() if isinstance(c, QuadBezier) else tuple(np.ravel(c)) for c in curves]
    return np.array(rows, dtype=float).reshape(-1, 6)


def curve_l1_cost(est, gt) -> np.ndarray:
    """``(i, j)`` = sum of |dx| + |dy| over the three control points."""
    e, g = _as_controls(est), _as_controls(gt)
    return np.abs(e[:, None, :] - g[None, :, :]).sum(-1)


def _sample(ctrl: np.ndarray, n: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    c = ctrl.reshape(-1, 3, 2)
    return ((1 - t) ** 2)[None] * c[:, None, 0] + (2 * (1 - t) * t)[None] * c[:, None, 1] \
        + (t ** 2)[None] * c[:, None, 2]


def curve_support_cost(est, gt, samples: int = SUPPORT_SAMPLES,
                       resolution: int = SUPPORT_RESOLUTION) -> np.ndarray:
    """``(i, j)`` = mean distance from points of estimate ``i`` to GT curve ``j``.

    One-sided: a fragment lying on a GT curve costs (almost) nothing however
    short it is. GT curves are approximated by ``resolution``-segment
    polylines, so the floor is the chord error, about ``1e-5`` for unit-size
    curves.
    """
    e, g = _as_controls(est), _as_controls(gt)
    if len(e) == 0 or len(g) == 0:
        return np.zeros((len(e), len(g)))
    p = _sample(e, samples)                       # N x s x 2
    poly = _sample(g, resolution + 1)             # N' x (r+1) x 2
    a, d = poly[:, :-1], np.diff(poly, axis=1)    # N' x r x 2
    dd = np.maximum((d * d).sum(-1), 1e-300)
    rel = p[:, :, None, None, :] - a[None, None]  # N x s x N' x r x 2
    u = np.clip((rel * d[None, None]).sum(-1) / dd[None, None], 0.0, 1.0)
    gap = rel - u[..., None] * d[None, None]
    dist = np.sqrt((gap * gap).sum(-1)).min(-1)   # N x s x N'
    return dist.mean(1)


@dataclass(frozen=True)
class Assignment:
    """Min matching between estimated and ground-truth lanes.

    ``R[i]`` is the GT index of estimate ``i`` (``-1`` when GT is empty);
    ``S[n]`` lists the estimates matched to GT lane ``n``. ``cost`` is the
    control-point L1 matrix, which ranks the members of ``S[n]``.
    """

    R: tuple[int, ...]
    S: tuple[tuple[int, ...], ...]
    cost: np.ndarray

    @property
    def n_est(self) -> int:
        return len(self.R)

    @property
    def n_gt(self) -> int:
        return len(self.S)

    def best_match(self, n: int) -> int | None:
        """Closest estimate among ``S[n]`` (lowest index on ties)."""
        if not self.S[n]:
            return None
        return min(self.S[n], key=lambda i: (self.cost[i, n], i))


def min_match(est, gt, distance: str = "support") -> Assignment:
    """Match every estimate to its closest GT lane; ties go to the lower index.

    ``distance="support"`` measures closeness with :func:`curve_support_cost`,
    so every fragment of a GT curve lands on that curve. ``"control_l1"``
    uses the control-point L1 cost, under which a half-curve can sit nearer
    to a neighbouring lane than to its parent.
    """
    if distance not in MATCH_COSTS:
        raise ParameterError(f"distance must be one of {MATCH_COSTS}, got {distance!r}")
    cost = curve_l1_cost(est, gt)
    n_est, n_gt = cost.shape
    if n_gt == 0:
        return Assignment(tuple([-1] * n_est), (), cost)
    near = cost if distance == "control_l1" else curve_support_cost(est, gt)
    R = tuple(int(k) for k in np.argmin(near, axis=1)) if n_est else ()
    S = tuple(tuple(i for i, r in enumerate(R) if r == n) for n in range(n_gt))
    return Assignment(R, S, cost)


def identity_assignment(n: int) -> Assignment:
    cost = np.zeros((n, n))
    return Assignment(tuple(range(n)), tuple((i,) for i in range(n)), cost)


@dataclass(frozen=True)
class CycleTargets:
    """GT cycles re-expressed over estimated curves.

    ``matrix`` is ``M' x (N + K)``: row ``i``, column ``j`` is set iff the GT
    curve that estimate ``j`` is matched to lies in GT cycle ``i``; boundary
    columns are copied. ``gt_cycles`` and ``assignment`` are kept because the
    cycle statistics are counted over GT curves.
    """

    matrix: np.ndarray
    gt_cycles: np.ndarray
    assignment: Assignment

    @property
    def n_est(self) -> int:
        return self.assignment.n_est

    def column_map(self) -> np.ndarray:
        """GT column of every estimate column (``-1`` for unmatched)."""
        n_gt = self.assignment.n_gt
        lanes = list(self.assignment.R)
        return np.array(lanes + [n_gt + k for k in range(K_BOUNDARY)], dtype=int)


def remap_cycle_targets(gt_cycles, asg: Assignment) -> CycleTargets:
    gt = np.asarray(gt_cycles, dtype=bool)
    if gt.ndim != 2:
        gt = gt.reshape(0, asg.n_gt + K_BOUNDARY)
    if gt.shape[1] != asg.n_gt + K_BOUNDARY:
        raise ParameterError(
            f"GT cycles have {gt.shape[1]} columns, expected {asg.n_gt + K_BOUNDARY}"
        )
    n = asg.n_est
    out = np.zeros((gt.shape[0], n + K_BOUNDARY), dtype=bool)
    for j, r in enumerate(asg.R):
        if r >= 0:
            out[:, j] = gt[:, r]
    out[:, n:] = gt[:, asg.n_gt:]
    return CycleTargets(out, gt, asg)


@dataclass(frozen=True)
class CycleMatch:
    pairs: tuple[tuple[int, int], ...]  # (GT cycle, proposal)
    tp: int
    fp: int
    fn: int

    @property
    def f_score(self) -> float:
        return f_score(self.tp, self.fp, self.fn)


def f_score(tp: float, fp: float, fn: float) -> float:
    """``100 * 2TP / (2TP + FP + FN)``; an empty comparison scores 100."""
    den = 2 * tp + fp + fn
    if den == 0:
        return 100.0
    return 100.0 * 2 * tp / den


def cycle_statistics(targets: CycleTargets, proposals) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pair ``TP', FP', FN'`` (each ``M' x M``) summed over GT curves."""
    props = np.asarray(proposals, dtype=bool)
    width = targets.n_est + K_BOUNDARY
    if props.size == 0:
        props = props.reshape(0, width)
    if props.ndim != 2 or props.shape[1] != width:
        raise ParameterError(f"proposals must have {width} columns, got shape {props.shape}")
    gt = targets.gt_cycles
    colmap = targets.column_map()
    # project each proposal onto GT curves: k is hit iff some member n has R(n) = k
    proj = np.zeros((props.shape[0], gt.shape[1]), dtype=bool)
    for j, k in enumerate(colmap):
        if k >= 0:
            proj[:, k] |= props[:, j]
    g = gt.astype(np.int64)
    q = proj.astype(np.int64)
    tp = g @ q.T
    fn = g.sum(1)[:, None] - tp
    fp = q.sum(1)[None, :] - tp
    return tp, fp, fn


def match_cycles(targets: CycleTargets, proposals) -> CycleMatch:
    """Hungarian matching of GT cycles to proposals on ``H = FN' + FP'``.

    Positives of GT cycles left unmatched count as false negatives; unmatched
    proposals contribute nothing.
    """
    tp, fp, fn = cycle_statistics(targets, proposals)
    pairs, _ = hungarian(fn + fp) if tp.size else ([], 0.0)
    matched = {i for i, _ in pairs}
    TP = int(sum(tp[i, j] for i, j in pairs))
    FP = int(sum(fp[i, j] for i, j in pairs))
    FN = int(sum(fn[i, j] for i, j in pairs))
    FN += int(sum(targets.gt_cycles[i].sum() for i in range(targets.gt_cycles.shape[0]) if i not in matched))
    return CycleMatch(tuple(pairs), TP, FP, FN)


def lanes_of(curves: Sequence) -> np.ndarray:
    return _as_controls(curves)
