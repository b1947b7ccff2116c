"""Topological evaluation metrics: MC-F, H-GT-F, H-EST-F, I-Order, Detect, C-F."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .arrangement import (
    Arrangement,
    build_arrangement,
    compute_arrangement,
    extract_minimal_cycles,
    intersection_order_tokens,
)
from .bundles import PredictionBundle, prediction_to_graph
from .errors import ArrangementError, AssumptionViolation, ParameterError
from .geometry import GEOM_TOL
from .lanegraph import K_BOUNDARY, LaneGraph
from .matching import (
    Assignment,
    f_score,
    identity_assignment,
    match_cycles,
    min_match,
    remap_cycle_targets,
)

DEFAULT_THRESHOLD = 0.5
DEFAULT_TAU_DETECT = 0.05
UNMATCHED_DISTANCE = 2.0

# provenance tag per metric
METRIC_KINDS = {
    "mc_f": "native",
    "h_gt_f": "native",
    "h_est_f": "native",
    "i_order": "native",
    "detect": "reconstructed",
    "c_f": "reconstructed",
}


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance (insert, delete, substitute)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


@dataclass
class EstimateView:
    """An estimate reduced to a lane graph plus its (lenient) arrangement."""

    graph: LaneGraph
    slots: tuple[int, ...]  # prediction slot of each lane
    arrangement: Arrangement | None
    bundle: PredictionBundle | None = None
    flags: list[str] = field(default_factory=list)


def _lenient_arrangement(g: LaneGraph, tol: float, flags: list) -> Arrangement | None:
    if g.n_lanes == 0:
        return None
    try:
        return extract_minimal_cycles(compute_arrangement(g, tol, strict=False))
    except (ArrangementError, AssumptionViolation, ParameterError) as e:
        flags.append(f"est_arrangement_failed: {e}")
        return None


def estimate_view(est, threshold: float = DEFAULT_THRESHOLD, tol: float = GEOM_TOL) -> EstimateView:
    if isinstance(est, EstimateView):
        return est
    if isinstance(est, PredictionBundle):
        g, slots = prediction_to_graph(est, threshold)
        bundle = est
    elif isinstance(est, LaneGraph):
        g, slots, bundle = est, tuple(range(est.n_lanes)), None
    else:
        raise ParameterError(f"unsupported estimate type {type(est).__name__}")
    flags: list[str] = []
    return EstimateView(g, slots, _lenient_arrangement(g, tol, flags), bundle, flags)


def _lane_rows(cov: np.ndarray, n_lanes: int) -> np.ndarray:
    """Drop cycles bounded by FOV sides only; they carry no lane information."""
    return cov[cov[:, :n_lanes].any(axis=1)] if len(cov) else cov


def _est_covers(view: EstimateView) -> np.ndarray:
    n = view.graph.n_lanes
    if view.arrangement is None:
        return np.zeros((0, n + K_BOUNDARY), dtype=bool)
    return _lane_rows(view.arrangement.cover_matrix(), n)


def _head_proposals(view: EstimateView, threshold: float) -> np.ndarray:
    """Thresholded membership rows over the selected curves plus boundaries."""
    b = view.bundle
    if b is None:
        raise ParameterError("head metrics need a PredictionBundle")
    cols = list(view.slots) + [b.n_curves + k for k in range(K_BOUNDARY)]
    rows = b.Z_m_q[b.Z_m_p >= threshold][:, cols] >= 0.5
    return _lane_rows(rows, len(view.slots))


def _score(targets, proposals) -> float:
    m = match_cycles(targets, proposals)
    if m.tp + m.fp + m.fn == 0:
        # nothing positive on either side; agree only if both are empty
        return 100.0 if targets.gt_cycles.shape[0] == np.asarray(proposals).shape[0] else 0.0
    return m.f_score


@dataclass
class SceneMetrics:
    mc_f: float
    i_order: float
    detect: float
    c_f: float
    h_gt_f: float | None = None
    h_est_f: float | None = None
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class SceneEvaluator:
    """Shared state (arrangements, min matching) for all metrics of one scene."""

    def __init__(self, gt: LaneGraph, est, threshold: float = DEFAULT_THRESHOLD,
                 tol: float = GEOM_TOL, gt_arrangement: Arrangement | None = None):
        if not (0.0 <= threshold <= 1.0):
            raise ParameterError(f"threshold must lie in [0, 1], got {threshold}")
        self.gt = gt
        self.threshold = threshold
        self.tol = tol
        self.gt_arr = gt_arrangement or build_arrangement(gt, tol)
        self.view = estimate_view(est, threshold, tol)
        self.asg: Assignment = min_match(self.view.graph.control_array(), gt.control_array())
        self.gt_rows = _lane_rows(self.gt_arr.cover_matrix(), gt.n_lanes)

    @property
    def flags(self) -> list[str]:
        return self.view.flags

    def mc_f(self) -> float:
        targets = remap_cycle_targets(self.gt_rows, self.asg)
        return _score(targets, _est_covers(self.view))

    def h_gt_f(self) -> float:
        targets = remap_cycle_targets(self.gt_rows, self.asg)
        return _score(targets, _head_proposals(self.view, self.threshold))

    def h_est_f(self) -> float:
        n = self.view.graph.n_lanes
        targets = remap_cycle_targets(_est_covers(self.view), identity_assignment(n))
        return _score(targets, _head_proposals(self.view, self.threshold))

    # -- I-Order ---------------------------------------------------------

    def _gt_name(self, est_id: int) -> int:
        g = self.view.graph
        if est_id in g.boundary_ids:
            return self.gt.boundary_ids[g.boundary_ids.index(est_id)]
        return self.gt.lane_ids[self.asg.R[g.lane_ids.index(est_id)]]

    def _chain(self, start: int, n: int) -> list[int]:
        """Est lanes reached from ``start`` through connections inside ``S(n)``."""
        g = self.view.graph
        same = {g.lane_ids[i] for i in self.asg.S[n]}
        chain = [g.lane_ids[start]]
        seen = set(chain)
        for step, grow in ((g.successors, chain.append), (g.predecessors, lambda x: chain.insert(0, x))):
            cur = chain[-1] if step is g.successors else chain[0]
            while True:
                nxt = [x for x in step(cur) if x in same and x not in seen]
                if len(nxt) != 1:
                    break
                cur = nxt[0]
                seen.add(cur)
                grow(cur)
        return chain

    def _est_tokens(self, chain: list[int]) -> list[tuple[int, ...]]:
        arr = self.view.arrangement
        members = set(chain)
        pts: list[int] = []
        for cid in chain:
            for p in arr.orders[cid].sequence:
                if not pts or pts[-1] != p:
                    pts.append(p)
        out = []
        for p in pts:
            others = [c for c in arr.points[p].curve_ids if c not in members]
            if others:
                out.append(tuple(sorted(self._gt_name(c) for c in others)))
        return out

    def order_distances(self, follow_fragments: bool = True) -> list[float]:
        """Normalized edit distance per GT lane (2.0 where nothing matches)."""
        out = []
        arr = self.view.arrangement
        for n, gid in enumerate(self.gt.lane_ids):
            best = self.asg.best_match(n)
            if best is None or arr is None:
                out.append(UNMATCHED_DISTANCE)
                continue
            ref = intersection_order_tokens(self.gt_arr, gid)
            chain = self._chain(best, n) if follow_fragments else [self.view.graph.lane_ids[best]]
            est = self._est_tokens(chain)
            out.append(levenshtein(ref, est) / max(len(ref), 1))
        return out

    def i_order(self, follow_fragments: bool = True) -> float:
        if self.gt.n_lanes == 0:
            raise ParameterError("I-Order needs at least one GT lane")
        d = self.order_distances(follow_fragments)
        return math.fsum(d) / len(d)

    # -- reconstructed scores -------------------------------------------

    def detect(self, tau: float = DEFAULT_TAU_DETECT) -> float:
        n_gt = self.gt.n_lanes
        if n_gt == 0:
            return 100.0
        cost = self.asg.cost
        hit = sum(any(cost[i, n] / 6.0 < tau for i in self.asg.S[n]) for n in range(n_gt))
        return 100.0 * hit / n_gt

    def c_f(self) -> float:
        gt_idx = {cid: i for i, cid in enumerate(self.gt.lane_ids)}
        truth = {(gt_idx[x], gt_idx[y]) for x, y in self.gt.connections}
        g = self.view.graph
        est_idx = {cid: i for i, cid in enumerate(g.lane_ids)}
        mapped = set()
        for x, y in g.connections:
            a, b = self.asg.R[est_idx[x]], self.asg.R[est_idx[y]]
            if a >= 0 and b >= 0 and a != b:
                mapped.add((a, b))
        tp = len(truth & mapped)
        return f_score(tp, len(mapped - truth), len(truth - mapped))

    def all(self, tau: float = DEFAULT_TAU_DETECT, follow_fragments: bool = True) -> SceneMetrics:
        res = SceneMetrics(
            mc_f=self.mc_f(),
            i_order=self.i_order(follow_fragments) if self.gt.n_lanes else 0.0,
            detect=self.detect(tau),
            c_f=self.c_f(),
            flags=list(self.flags),
        )
        if self.view.bundle is not None:
            res.h_gt_f = self.h_gt_f()
            res.h_est_f = self.h_est_f()
        return res


# functional front ends


def mc_f(gt: LaneGraph, est, threshold: float = DEFAULT_THRESHOLD, tol: float = GEOM_TOL) -> float:
    return SceneEvaluator(gt, est, threshold, tol).mc_f()


def h_gt_f(gt: LaneGraph, pred: PredictionBundle, threshold: float = DEFAULT_THRESHOLD,
           tol: float = GEOM_TOL) -> float:
    return SceneEvaluator(gt, pred, threshold, tol).h_gt_f()


def h_est_f(pred: PredictionBundle, threshold: float = DEFAULT_THRESHOLD, tol: float = GEOM_TOL) -> float:
    """Head proposals against the cycles extracted from the predicted graph."""
    view = estimate_view(pred, threshold, tol)
    n = view.graph.n_lanes
    targets = remap_cycle_targets(_est_covers(view), identity_assignment(n))
    return _score(targets, _head_proposals(view, threshold))


def i_order(gt: LaneGraph, est, threshold: float = DEFAULT_THRESHOLD, tol: float = GEOM_TOL,
            follow_fragments: bool = True) -> float:
    return SceneEvaluator(gt, est, threshold, tol).i_order(follow_fragments)


def detect_ratio(gt: LaneGraph, est, tau: float = DEFAULT_TAU_DETECT,
                 threshold: float = DEFAULT_THRESHOLD, tol: float = GEOM_TOL) -> float:
    return SceneEvaluator(gt, est, threshold, tol).detect(tau)


def connectivity_f(gt: LaneGraph, est, threshold: float = DEFAULT_THRESHOLD,
                   tol: float = GEOM_TOL) -> float:
    return SceneEvaluator(gt, est, threshold, tol).c_f()


def evaluate_scene(gt: LaneGraph, est, threshold: float = DEFAULT_THRESHOLD,
                   tau: float = DEFAULT_TAU_DETECT, tol: float = GEOM_TOL) -> SceneMetrics:
    return SceneEvaluator(gt, est, threshold, tol).all(tau)


def aggregate(scenes: dict[str, SceneMetrics]) -> dict:
    """Uniform mean of every metric over the scenes that report it."""
    out = {}
    for key in METRIC_KINDS:
        vals = [getattr(m, key) for m in scenes.values() if getattr(m, key) is not None]
        out[key] = math.fsum(vals) / len(vals) if vals else None
    return out
