"""Reference values of the training objective L = L_curve + alpha * L_cycle.

Values only; gradients belong to whatever framework trains the network.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .bundles import GroundTruthBundle, PredictionBundle
from .errors import ParameterError
from .lanegraph import K_BOUNDARY
from .matching import (
    Assignment,
    CycleTargets,
    cycle_statistics,
    curve_l1_cost,
    hungarian,
    min_match,
    remap_cycle_targets,
)

EPS = 1e-7


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta_e: float = 1.0
    beta_c: float = 1.0
    beta_d: float = 1.0
    beta_f: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"weight {k} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossBreakdown:
    l_splines: float
    l_exists_curve: float
    l_connect: float
    l_member: float
    l_exists_cycle: float
    l_center: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def bce(p, y, eps: float = EPS) -> float:
    """Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps]."""
    p = np.clip(np.asarray(p, dtype=float).ravel(), eps, 1.0 - eps)
    y = np.asarray(y, dtype=float).ravel()
    if p.size == 0:
        return 0.0
    terms = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return math.fsum(terms) / p.size


def _mean_abs(a, b) -> float:
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)).ravel()
    return math.fsum(d) / d.size if d.size else 0.0


@dataclass(frozen=True)
class LossMatching:
    """Intermediate pairings, exposed for inspection and testing."""

    curve_pairs: tuple[tuple[int, int], ...]  # (candidate, GT curve)
    assignment: Assignment                    # min matching over all candidates
    targets: CycleTargets
    cycle_pairs: tuple[tuple[int, int], ...]  # (GT cycle, candidate)


def match_for_loss(pred: PredictionBundle, gt: GroundTruthBundle) -> LossMatching:
    n, n_gt = pred.n_curves, gt.n_curves
    if gt.n_cycles > pred.n_cycles or n_gt > n:
        raise ParameterError("prediction needs at least as many slots as ground truth")
    pairs, _ = hungarian(curve_l1_cost(pred.Z_c_q, gt.Y_c_q)) if n_gt else ([], 0.0)
    asg = min_match(pred.Z_c_q, gt.Y_c_q)
    targets = remap_cycle_targets(gt.Y_m_q_raw, asg)
    cyc_pairs: list = []
    if gt.n_cycles:
        tp, fp, fn = cycle_statistics(targets, pred.Z_m_q >= 0.5)
        cyc_pairs, _ = hungarian(fn + fp)
    return LossMatching(tuple(pairs), asg, targets, tuple(cyc_pairs))


def total_loss(pred: PredictionBundle, gt: GroundTruthBundle,
               w: LossWeights | None = None, eps: float = EPS) -> LossBreakdown:
    """Every term of the objective plus the weighted total.

    Curves are paired by Hungarian matching on control-point L1 cost.
    Connection BCE runs over ordered pairs of distinct matched candidates,
    labelled with the incidence of their GT partners. Cycle targets come from
    min matching, cycles are paired by Hungarian matching on ``FN' + FP'``
    with memberships binarized at 0.5, and unmatched cycle slots only enter
    the existence term (label 0). Each term is a mean.
    """
    w = w or LossWeights()
    m = match_for_loss(pred, gt)
    n = pred.n_curves

    cand = [i for i, _ in m.curve_pairs]
    gidx = [j for _, j in m.curve_pairs]
    l_spl = _mean_abs(pred.Z_c_q[cand], gt.Y_c_q[gidx]) if cand else 0.0
    exist = np.zeros(n)
    exist[cand] = 1.0
    l_ec = bce(pred.Z_c_p, exist, eps)

    off = ~np.eye(len(cand), dtype=bool)
    a_pred = pred.A_hat[np.ix_(cand, cand)][off]
    a_true = gt.incidence[np.ix_(gidx, gidx)][off]
    l_conn = bce(a_pred, a_true, eps)

    crow = [i for i, _ in m.cycle_pairs]
    ccol = [j for _, j in m.cycle_pairs]
    y = m.targets.matrix
    l_mem = bce(pred.Z_m_q[ccol], y[crow], eps) if crow else 0.0
    cexist = np.zeros(pred.n_cycles)
    cexist[ccol] = 1.0
    l_ecy = bce(pred.Z_m_p, cexist, eps)
    l_cen = _mean_abs(pred.Z_m_r[ccol], gt.Y_m_r[crow]) if crow else 0.0

    total = l_spl + w.beta_e * l_ec + w.beta_c * l_conn + w.alpha * (
        l_mem + w.beta_d * l_ecy + w.beta_f * l_cen
    )
    return LossBreakdown(l_spl, l_ec, l_conn, l_mem, l_ecy, l_cen, total)


__all__ = ["EPS", "K_BOUNDARY", "LossBreakdown", "LossMatching", "LossWeights",
           "bce", "match_for_loss", "total_loss"]
