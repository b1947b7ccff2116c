"""Minimal-cycle topology of directed Bezier lane graphs."""

__version__ = "0.1.0"

from .arrangement import (
    Arrangement,
    MinimalCycle,
    build_arrangement,
    check_invariants,
    compute_arrangement,
    extract_minimal_cycles,
    intersection_order_tokens,
)
from .bundles import GroundTruthBundle, PredictionBundle, prediction_to_graph
from .geometry import GEOM_TOL, QuadBezier, intersect_curves
from .lanegraph import FovSpec, LaneCurve, LaneGraph, merge_connected, validate_graph
from .loss import LossWeights, total_loss
from .matching import hungarian, match_cycles, min_match, remap_cycle_targets
from .metrics import evaluate_scene, i_order, mc_f
from .synth import SceneParams, deform, fragment, gen_grid, gen_random_scene
from .topology import (
    CurveCorrespondence,
    Topology,
    check_lemma2,
    cover_sets_equal,
    cycle_from_cover,
    orders_equal,
)

__all__ = [
    "Arrangement",
    "CurveCorrespondence",
    "FovSpec",
    "GEOM_TOL",
    "GroundTruthBundle",
    "LaneCurve",
    "LaneGraph",
    "LossWeights",
    "MinimalCycle",
    "PredictionBundle",
    "QuadBezier",
    "SceneParams",
    "Topology",
    "build_arrangement",
    "check_invariants",
    "check_lemma2",
    "compute_arrangement",
    "cover_sets_equal",
    "cycle_from_cover",
    "deform",
    "evaluate_scene",
    "extract_minimal_cycles",
    "fragment",
    "gen_grid",
    "gen_random_scene",
    "hungarian",
    "i_order",
    "intersect_curves",
    "intersection_order_tokens",
    "match_cycles",
    "mc_f",
    "merge_connected",
    "min_match",
    "orders_equal",
    "prediction_to_graph",
    "remap_cycle_targets",
    "total_loss",
    "validate_graph",
]
