"""Network-output and ground-truth tensors, and conversion to lane graphs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrangement import build_arrangement
from .errors import ParameterError
from .geometry import GEOM_TOL, QuadBezier
from .lanegraph import K_BOUNDARY, FovSpec, LaneCurve, LaneGraph, merge_connected


def _prob(name, a, shape):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        a = a.reshape(shape)
    if a.shape != shape:
        raise ParameterError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)) or a.min(initial=0.0) < 0.0 or a.max(initial=0.0) > 1.0:
        raise ParameterError(f"{name} must hold probabilities in [0, 1]")
    return a


def _real(name, a, shape):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        a = a.reshape(shape)
    if a.shape != shape:
        raise ParameterError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class PredictionBundle:
    """Raw head outputs for ``N`` curve slots and ``M`` cycle slots."""

    Z_c_q: np.ndarray  # N x 6 control points
    Z_c_p: np.ndarray  # N existence probabilities
    A_hat: np.ndarray  # N x N connection probabilities
    Z_m_q: np.ndarray  # M x (N + K) membership probabilities
    Z_m_p: np.ndarray  # M existence probabilities
    Z_m_r: np.ndarray  # M x 2 centers

    def __post_init__(self):
        q = np.asarray(self.Z_c_q, dtype=float)
        n = q.reshape(-1, 6).shape[0] if q.size else 0
        m = np.asarray(self.Z_m_p).size
        object.__setattr__(self, "Z_c_q", _real("Z_c_q", q, (n, 6)))
        object.__setattr__(self, "Z_c_p", _prob("Z_c_p", self.Z_c_p, (n,)))
        object.__setattr__(self, "A_hat", _prob("A_hat", self.A_hat, (n, n)))
        object.__setattr__(self, "Z_m_q", _prob("Z_m_q", self.Z_m_q, (m, n + K_BOUNDARY)))
        object.__setattr__(self, "Z_m_p", _prob("Z_m_p", self.Z_m_p, (m,)))
        object.__setattr__(self, "Z_m_r", _real("Z_m_r", self.Z_m_r, (m, 2)))

    @property
    def n_curves(self) -> int:
        return self.Z_c_q.shape[0]

    @property
    def n_cycles(self) -> int:
        return self.Z_m_p.shape[0]

    @classmethod
    def empty(cls, n_curves: int = 0, n_cycles: int = 0) -> "PredictionBundle":
        """All slots present with probability zero."""
        n, m = n_curves, n_cycles
        return cls(np.full((n, 6), 0.5), np.zeros(n), np.zeros((n, n)),
                   np.zeros((m, n + K_BOUNDARY)), np.zeros(m), np.full((m, 2), 0.5))

    @classmethod
    def from_graph(cls, g: LaneGraph, pad_curves: int = 0, pad_cycles: int = 0,
                   tol: float = GEOM_TOL) -> "PredictionBundle":
        """A perfect prediction of ``g``, optionally padded with empty slots.

        Padding curves sit after the real ones, so boundary membership columns
        shift right accordingly.
        """
        arr = build_arrangement(g, tol)
        n, m = g.n_lanes, len(arr.cycles)
        N, M = n + pad_curves, m + pad_cycles
        q = np.full((N, 6), 0.5)
        q[:n] = g.control_array()
        p = np.zeros(N)
        p[:n] = 1.0
        a = np.zeros((N, N))
        a[:n, :n] = g.incidence
        cov = arr.cover_matrix()
        mq = np.zeros((M, N + K_BOUNDARY))
        mq[:m, :n] = cov[:, :n]
        mq[:m, N:] = cov[:, n:]
        mp = np.zeros(M)
        mp[:m] = 1.0
        r = np.full((M, 2), 0.5)
        r[:m] = [c.centroid for c in arr.cycles]
        return cls(q, p, a, mq, mp, r)


@dataclass(frozen=True, eq=False)
class GroundTruthBundle:
    Y_c_q: np.ndarray       # N' x 6
    incidence: np.ndarray   # N' x N' boolean
    Y_m_q_raw: np.ndarray   # M' x (N' + K) boolean covers over GT curves
    Y_m_r: np.ndarray       # M' x 2 centroids

    def __post_init__(self):
        q = np.asarray(self.Y_c_q, dtype=float)
        n = q.reshape(-1, 6).shape[0] if q.size else 0
        m = np.asarray(self.Y_m_r).reshape(-1, 2).shape[0] if np.asarray(self.Y_m_r).size else 0
        object.__setattr__(self, "Y_c_q", _real("Y_c_q", q, (n, 6)))
        inc = np.asarray(self.incidence, dtype=bool)
        object.__setattr__(self, "incidence", inc.reshape(n, n) if inc.size == 0 else inc)
        if self.incidence.shape != (n, n):
            raise ParameterError(f"incidence has shape {self.incidence.shape}, expected {(n, n)}")
        cov = np.asarray(self.Y_m_q_raw, dtype=bool)
        cov = cov.reshape(m, n + K_BOUNDARY) if cov.size == 0 else cov
        if cov.shape != (m, n + K_BOUNDARY):
            raise ParameterError(f"Y_m_q_raw has shape {cov.shape}, expected {(m, n + K_BOUNDARY)}")
        object.__setattr__(self, "Y_m_q_raw", cov)
        object.__setattr__(self, "Y_m_r", _real("Y_m_r", self.Y_m_r, (m, 2)))

    @property
    def n_curves(self) -> int:
        return self.Y_c_q.shape[0]

    @property
    def n_cycles(self) -> int:
        return self.Y_m_r.shape[0]

    @classmethod
    def from_graph(cls, g: LaneGraph, tol: float = GEOM_TOL) -> "GroundTruthBundle":
        arr = build_arrangement(g, tol)
        cen = np.array([c.centroid for c in arr.cycles], dtype=float).reshape(-1, 2)
        return cls(g.control_array(), g.incidence, arr.cover_matrix(), cen)


def prediction_to_graph(
    pred: PredictionBundle,
    threshold: float = 0.5,
    fov: FovSpec | None = None,
) -> tuple[LaneGraph, tuple[int, ...]]:
    """Lane graph of the curves whose existence clears ``threshold``.

    Control points are clipped into the unit square, connections are the
    off-diagonal ``A_hat`` entries at or above ``threshold``, and connected
    endpoints are snapped together. Returns the graph (lane ids ``0..n-1``)
    and the prediction slot index of each lane.
    """
    keep = []
    lanes = []
    for i in np.flatnonzero(pred.Z_c_p >= threshold):
        pts = np.clip(pred.Z_c_q[i], 0.0, 1.0)
        try:
            b = QuadBezier.from_flat(pts)
        except ParameterError:
            continue  # all three control points coincide
        lanes.append(LaneCurve(len(keep), b))
        keep.append(int(i))
    sub = pred.A_hat[np.ix_(keep, keep)] >= threshold if keep else np.zeros((0, 0), bool)
    np.fill_diagonal(sub, False)
    g = LaneGraph.from_matrix(lanes, sub, fov=fov or FovSpec())
    return merge_connected(g), tuple(keep)
