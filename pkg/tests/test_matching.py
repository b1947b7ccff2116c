import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linear_sum_assignment

from lanetopo.errors import ParameterError
from lanetopo.geometry import QuadBezier
from lanetopo.matching import (
    curve_l1_cost,
    curve_support_cost,
    f_score,
    hungarian,
    identity_assignment,
    match_cycles,
    min_match,
    remap_cycle_targets,
)

from oracles import bez, brute_force_assignment, cycle_stats_by_pairing

shapes = st.tuples(st.integers(1, 6), st.integers(1, 6))
costs = shapes.flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(0, 100, allow_nan=False, width=32))
)


@given(costs)
def test_hungarian_matches_brute_force(c):
    pairs, total = hungarian(c)
    assert total == pytest.approx(brute_force_assignment(c), abs=1e-9)
    rows, cols = zip(*pairs)
    assert len(pairs) == min(c.shape)
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert list(rows) == sorted(rows)


@given(costs)
def test_hungarian_matches_scipy(c):
    _, total = hungarian(c)
    r, k = linear_sum_assignment(c)
    assert total == pytest.approx(c[r, k].sum(), abs=1e-6)


@given(arrays(np.int64, (5, 5), elements=st.integers(0, 2)))
def test_hungarian_integer_ties(c):
    _, total = hungarian(c)
    assert total == brute_force_assignment(c)


def test_hungarian_edge_cases():
    assert hungarian(np.zeros((0, 3))) == ([], 0.0)
    assert hungarian([[5.0]]) == ([(0, 0)], 5.0)
    pairs, total = hungarian([[1, 2, 3], [2, 4, 6]])
    assert total == 4 and pairs == [(0, 1), (1, 0)]
    pairs, total = hungarian([[1, 2], [2, 4], [3, 6]])
    assert total == 4 and pairs == [(0, 1), (1, 0)]
    with pytest.raises(ParameterError):
        hungarian([[np.nan]])
    with pytest.raises(ParameterError):
        hungarian([1, 2, 3])


def test_hungarian_is_deterministic():
    c = np.ones((4, 4))
    assert hungarian(c) == hungarian(c.copy())


def test_l1_cost_and_min_match_ties():
    a = QuadBezier((0, 0), (0.5, 0), (1, 0))
    b = QuadBezier((0, 1), (0.5, 1), (1, 1))
    mid = QuadBezier((0, 0.5), (0.5, 0.5), (1, 0.5))
    cost = curve_l1_cost([a, b, mid], [a, b])
    np.testing.assert_allclose(cost, [[0, 3], [3, 0], [1.5, 1.5]])
    asg = min_match([a, b, mid], [a, b])
    assert asg.R == (0, 1, 0)  # tie goes to the lower GT index
    assert asg.S == ((0, 2), (1,))
    assert asg.best_match(0) == 0


def test_min_match_empty_sides():
    a = QuadBezier((0, 0), (0.5, 0), (1, 0))
    asg = min_match([a], [])
    assert asg.R == (-1,) and asg.S == ()
    asg = min_match(np.zeros((0, 6)), [a])
    assert asg.R == () and asg.S == ((),)
    assert asg.best_match(0) is None


def test_remap_copies_boundary_columns():
    asg = min_match(np.array([[0.0] * 6, [1.0] * 6, [0.1] * 6]), np.array([[0.0] * 6, [1.0] * 6]))
    gt = np.array([[1, 0, 1, 0, 1, 0], [0, 1, 0, 1, 0, 1]], dtype=bool)
    t = remap_cycle_targets(gt, asg)
    assert t.matrix.shape == (2, 7)
    np.testing.assert_array_equal(t.matrix[:, :3], [[1, 0, 1], [0, 1, 0]])
    np.testing.assert_array_equal(t.matrix[:, 3:], gt[:, 2:])
    np.testing.assert_array_equal(t.column_map(), [0, 1, 0, 2, 3, 4, 5])
    with pytest.raises(ParameterError):
        remap_cycle_targets(np.zeros((1, 3), dtype=bool), asg)


def test_f_score_conventions():
    assert f_score(0, 0, 0) == 100.0
    assert f_score(1, 1, 0) == pytest.approx(200 / 3)
    assert f_score(0, 3, 4) == 0.0


def test_identical_cycles_score_100():
    asg = identity_assignment(2)
    gt = np.array([[1, 1, 1, 0, 0, 1], [1, 0, 0, 1, 1, 0]], dtype=bool)
    t = remap_cycle_targets(gt, asg)
    m = match_cycles(t, gt[::-1])
    assert (m.tp, m.fp, m.fn) == (gt.sum(), 0, 0)
    assert sorted(m.pairs) == [(0, 1), (1, 0)]


def test_fragments_project_to_their_gt_curve():
    # estimates 0 and 1 are both pieces of GT lane 0
    est = np.array([[0.0] * 6, [0.05] * 6, [1.0] * 6])
    gt = np.array([[0.0] * 6, [1.0] * 6])
    t = remap_cycle_targets(np.array([[1, 1, 1, 0, 0, 0]], dtype=bool), min_match(est, gt))
    m = match_cycles(t, np.array([[0, 1, 1, 1, 0, 0, 0]], dtype=bool))
    assert (m.tp, m.fp, m.fn) == (3, 0, 0)


def test_unmatched_gt_cycles_are_false_negatives():
    t = remap_cycle_targets(np.ones((3, 5), dtype=bool), identity_assignment(1))
    m = match_cycles(t, np.ones((1, 5), dtype=bool))
    assert (m.tp, m.fp, m.fn) == (5, 0, 10)
    m = match_cycles(t, np.zeros((0, 5), dtype=bool))
    assert (m.tp, m.fp, m.fn) == (0, 0, 15)


@pytest.mark.parametrize("seed", range(40))
def test_cycle_matching_agrees_with_exhaustive_pairing(seed):
    rng = np.random.default_rng(seed)
    n_gt, n_est = rng.integers(1, 4), rng.integers(1, 5)
    m_gt, m_p = rng.integers(1, 4), rng.integers(0, 4)
    gt_ctrl = rng.uniform(size=(n_gt, 6))
    est_ctrl = rng.uniform(size=(n_est, 6))
    asg = min_match(est_ctrl, gt_ctrl)
    gt_rows = rng.random((m_gt, n_gt + 4)) < 0.5
    props = rng.random((m_p, n_est + 4)) < 0.5
    t = remap_cycle_targets(gt_rows, asg)
    got = match_cycles(t, props)
    cost, tp, fp, fn = cycle_stats_by_pairing(gt_rows, props, t.column_map())
    unmatched = sum(gt_rows[i].sum() for i in range(m_gt) if i not in {a for a, _ in got.pairs})
    assert got.fp + got.fn - unmatched == cost
    # TP + FN counts every GT positive once, whatever the pairing
    assert got.tp + got.fn == tp + fn == gt_rows.sum()


def test_support_cost_against_dense_sampling():
    rng = np.random.default_rng(7)
    est, gt = rng.uniform(size=(3, 6)), rng.uniform(size=(4, 6))
    got = curve_support_cost(est, gt)
    dense = [bez(g, np.linspace(0, 1, 4001)) for g in gt]
    for i, e in enumerate(est):
        pts = bez(e, np.linspace(0, 1, 17))
        for j, d in enumerate(dense):
            ref = np.linalg.norm(pts[:, None] - d[None], axis=-1).min(1).mean()
            assert got[i, j] == pytest.approx(ref, abs=2e-4)


def test_fragments_match_their_parent_under_support_cost():
    # the second half of a long lane is L1-closer to a lane diverging at its middle
    parent = QuadBezier((0.0, 0.5), (0.5, 0.5), (1.0, 0.5))
    other = QuadBezier((0.5, 0.5), (0.75, 0.52), (1.0, 0.6))
    _, half = parent.split(0.5)
    assert min_match([half], [parent, other], distance="control_l1").R == (1,)
    assert min_match([half], [parent, other]).R == (0,)
    assert curve_support_cost([half], [parent])[0, 0] < 1e-9
    with pytest.raises(ParameterError):
        min_match([half], [parent], distance="chamfer")
