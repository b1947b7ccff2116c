import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lanetopo.arrangement import build_arrangement, intersection_order_tokens
from lanetopo.bundles import PredictionBundle
from lanetopo.errors import ParameterError
from lanetopo.geometry import QuadBezier
from lanetopo.lanegraph import LaneGraph, boundary_only
from lanetopo.metrics import (
    UNMATCHED_DISTANCE,
    SceneEvaluator,
    SceneMetrics,
    aggregate,
    connectivity_f,
    detect_ratio,
    evaluate_scene,
    h_est_f,
    h_gt_f,
    i_order,
    levenshtein,
    mc_f,
)
from lanetopo.synth import SceneParams, deform, fragment, gen_grid, gen_random_scene

from oracles import edit_distance

GRIDS = [(1, 0), (0, 1), (1, 1), (2, 1), (2, 2), (3, 2)]

tokens = st.lists(st.tuples(st.integers(-4, 6)), max_size=12)


@given(tokens, tokens)
def test_levenshtein_matches_oracle(a, b):
    assert levenshtein(a, b) == edit_distance(a, b)
    assert levenshtein(a, b) == levenshtein(b, a)


def test_levenshtein_examples():
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein([], [(1,), (2,)]) == 2
    assert levenshtein([(1, 2)], [(1, 2)]) == 0


@pytest.mark.parametrize("nx,ny", GRIDS)
def test_perfect_graph_is_a_fixed_point(nx, ny):
    g = gen_grid(nx, ny)
    m = evaluate_scene(g, g)
    assert (m.mc_f, m.i_order, m.detect, m.c_f) == (100.0, 0.0, 100.0, 100.0)
    assert m.h_gt_f is None and m.flags == []


@pytest.mark.parametrize("nx,ny", GRIDS)
def test_perfect_bundle_is_a_fixed_point(nx, ny):
    g = gen_grid(nx, ny)
    pred = PredictionBundle.from_graph(g, pad_curves=2, pad_cycles=3)
    m = evaluate_scene(g, pred)
    assert (m.mc_f, m.i_order, m.detect, m.c_f) == (100.0, 0.0, 100.0, 100.0)
    assert m.h_gt_f == 100.0 and m.h_est_f == 100.0
    assert h_gt_f(g, pred) == 100.0 and h_est_f(pred) == 100.0


def test_empty_prediction():
    g = gen_grid(2, 2)
    for est in (PredictionBundle.empty(3, 2), boundary_only()):
        assert mc_f(g, est) == 0.0
        assert i_order(g, est) == UNMATCHED_DISTANCE
        assert detect_ratio(g, est) == 0.0
        assert connectivity_f(g, est) in (0.0, 100.0)


def test_threshold_gates_curves_and_cycles():
    g = gen_grid(1, 1)
    pred = PredictionBundle.from_graph(g)
    assert mc_f(g, pred, threshold=1.0) == 100.0
    low = PredictionBundle(pred.Z_c_q, pred.Z_c_p * 0.4, pred.A_hat, pred.Z_m_q, pred.Z_m_p, pred.Z_m_r)
    assert mc_f(g, low) == 0.0
    with pytest.raises(ParameterError):
        SceneEvaluator(g, pred, threshold=1.5)


def test_missing_crossing_costs_one_edit():
    # GT: vertical 0 crossed by horizontals 1 and 2; estimate drops lane 2
    v = QuadBezier((0.5, 0.0), (0.5, 0.5), (0.5, 1.0))
    h1 = QuadBezier((0.0, 0.3), (0.5, 0.3), (1.0, 0.3))
    h2 = QuadBezier((0.0, 0.7), (0.5, 0.7), (1.0, 0.7))
    gt = LaneGraph.from_beziers([v, h1, h2])
    est = LaneGraph.from_beziers([v, h1])
    ev = SceneEvaluator(gt, est)
    d = ev.order_distances()
    # lane 0: [-1, 1, 2, -3] vs [-1, 1, -3]; lane 1 unchanged; no estimate lands on lane 2
    assert d[0] == pytest.approx(1 / 4)
    assert d[1] == 0.0
    assert d[2] == UNMATCHED_DISTANCE
    assert ev.i_order() == pytest.approx((0.25 + 0 + 2) / 3)


def _fragment_bound(arr, c, n_lanes):
    return (1.0 / len(intersection_order_tokens(arr, c))) / n_lanes


@pytest.mark.parametrize("seed", range(6))
def test_fragmentation_keeps_mc_f_and_bounds_i_order(seed):
    g = gen_random_scene(SceneParams(seed=seed))
    arr = build_arrangement(g)
    base = SceneEvaluator(g, g, gt_arrangement=arr).i_order()
    for c in g.lane_ids:
        ev = SceneEvaluator(g, fragment(g, c), gt_arrangement=arr)
        assert ev.mc_f() == 100.0
        assert ev.i_order() - base <= _fragment_bound(arr, c, g.n_lanes) + 1e-12


def test_literal_i_order_penalizes_fragments():
    g = gen_grid(3, 2)
    f = fragment(g, 0)
    ev = SceneEvaluator(g, f)
    assert ev.i_order() == 0.0
    # best match alone sees only half of the crossings of lane 0
    assert ev.i_order(follow_fragments=False) > 0.0


def test_small_deformation_keeps_topology_scores():
    g = gen_random_scene(SceneParams(seed=11))
    est = deform(g, 0.002, seed=1)
    m = evaluate_scene(g, est)
    assert m.mc_f == 100.0 and m.i_order == 0.0 and m.c_f == 100.0


def test_detect_threshold():
    g = gen_grid(1, 0)
    shifted = LaneGraph.from_beziers([QuadBezier((0.56, 0.0), (0.56, 0.5), (0.56, 1.0))])
    # mean control-point L1 per coordinate is 0.06 * 3 / 6 = 0.03
    assert detect_ratio(g, shifted, tau=0.05) == 100.0
    assert detect_ratio(g, shifted, tau=0.02) == 0.0


def test_connectivity_f():
    a = QuadBezier((0.0, 0.3), (0.25, 0.3), (0.5, 0.5))
    b = QuadBezier((0.5, 0.5), (0.75, 0.7), (1.0, 0.7))
    gt = LaneGraph.from_beziers([a, b], [(0, 1)])
    assert connectivity_f(gt, gt) == 100.0
    assert connectivity_f(gt, LaneGraph.from_beziers([a, b])) == 0.0
    # fragment-to-fragment links map onto one GT lane and are ignored
    assert connectivity_f(gt, fragment(gt, 0)) == 100.0


def test_aggregate_means():
    a = SceneMetrics(100.0, 0.0, 100.0, 100.0)
    b = SceneMetrics(50.0, 1.0, 0.0, 50.0, h_gt_f=80.0)
    out = aggregate({"a": a, "b": b})
    assert out["mc_f"] == 75.0 and out["i_order"] == 0.5
    assert out["h_gt_f"] == 80.0 and out["h_est_f"] is None


def test_unsupported_estimate_type():
    with pytest.raises(ParameterError):
        mc_f(gen_grid(1, 1), np.zeros(3))
