import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lanetopo.errors import AssumptionViolation, ParameterError
from lanetopo.geometry import (
    GEOM_TOL,
    QuadBezier,
    closest_param,
    eval_bezier,
    intersect_all,
    intersect_curves,
    is_self_overlapping,
    sample_polyline,
)

from oracles import bez, sampled_crossings

ARCH = QuadBezier((0, 0), (0.5, 1), (1, 0))

coord = st.floats(0.0, 1.0, allow_nan=False)
point = st.tuples(coord, coord)


@st.composite
def curves(draw):
    p0, p1, p2 = draw(point), draw(point), draw(point)
    if p0 == p1 == p2:
        p2 = (1.0 - p0[0], 1.0 - p0[1]) if p0 != (0.5, 0.5) else (0.0, 0.0)
    return QuadBezier(p0, p1, p2)


def test_eval_endpoints_and_arch():
    assert eval_bezier(ARCH, 0.0) == (0.0, 0.0)
    assert eval_bezier(ARCH, 1.0) == (1.0, 0.0)
    assert eval_bezier(ARCH, 0.5) == pytest.approx((0.5, 0.5))


@pytest.mark.parametrize("t", [-0.1, 1.0000001, math.nan])
def test_eval_rejects_out_of_range(t):
    with pytest.raises(ParameterError):
        eval_bezier(ARCH, t)


def test_sample_polyline_examples():
    assert sample_polyline(ARCH, 2).tolist() == [[0, 0], [1, 0]]
    line = QuadBezier((0, 0), (0.5, 0.5), (1, 1))
    np.testing.assert_allclose(sample_polyline(line, 3), [[0, 0], [0.5, 0.5], [1, 1]])
    assert sample_polyline(ARCH, 5)[2] == pytest.approx((0.5, 0.5))
    with pytest.raises(ParameterError):
        sample_polyline(ARCH, 1)


def test_constructor_rejects_degenerate():
    with pytest.raises(ParameterError):
        QuadBezier((0.2, 0.2), (0.2, 0.2), (0.2, 0.2))
    with pytest.raises(ParameterError):
        QuadBezier((0, 0), (math.inf, 0), (1, 1))


def test_chords_cross_at_center():
    a = QuadBezier((0, 0), (0.5, 0.5), (1, 1))
    b = QuadBezier((0, 1), (0.5, 0.5), (1, 0))
    hit = intersect_curves(a, b)
    assert hit.pos == pytest.approx((0.5, 0.5), abs=1e-9)
    assert hit.t_a == pytest.approx(0.5, abs=1e-9)
    assert hit.t_b == pytest.approx(0.5, abs=1e-9)


def test_disjoint_boxes_do_not_meet():
    a = QuadBezier((0, 0), (0.1, 0.2), (0.2, 0))
    b = QuadBezier((0.5, 0.5), (0.6, 0.7), (0.7, 0.5))
    assert intersect_curves(a, b) is None


def test_shared_endpoint_reported_at_parameter_extreme():
    a = QuadBezier((0, 0), (0.3, 0.4), (0.5, 0.5))
    b = QuadBezier((0.5, 0.5), (0.7, 0.4), (1, 0.2))
    hit = intersect_curves(a, b)
    assert (hit.t_a, hit.t_b) == (1.0, 0.0)


def test_double_crossing_and_overlap_raise():
    line = QuadBezier((0, 0.3), (0.5, 0.3), (1, 0.3))
    with pytest.raises(AssumptionViolation) as e:
        intersect_curves(ARCH, line)
    assert e.value.kind == "MultipleIntersections"
    assert len(intersect_all(ARCH, line)) == 2
    with pytest.raises(AssumptionViolation):
        intersect_curves(ARCH, ARCH)
    half = ARCH.restrict(0.2, 0.7)
    with pytest.raises(AssumptionViolation):
        intersect_curves(ARCH, half)


@pytest.mark.parametrize("seed", range(12))
def test_crossings_match_sampling_oracle(seed):
    rng = np.random.default_rng(seed)
    while True:
        ca = rng.uniform(0, 1, (3, 2))
        cb = rng.uniform(0, 1, (3, 2))
        ref = sampled_crossings(ca, cb)
        if ref:
            break
    got = intersect_all(QuadBezier(*map(tuple, ca)), QuadBezier(*map(tuple, cb)))
    assert len(got) == len(ref)
    for s, u, _ in ref:
        h = min(got, key=lambda h: abs(h.t_a - s) + abs(h.t_b - u))
        assert np.linalg.norm(bez(ca, h.t_a) - bez(ca, s)) < 1e-6
        assert np.linalg.norm(np.array(h.pos) - bez(cb, u)) < 1e-6


@given(curves(), st.floats(0.01, 0.99))
def test_split_halves_lie_on_curve(c, t):
    left, right = c.split(t)
    assert left.p2 == right.p0
    for s in (0.0, 0.3, 0.7, 1.0):
        np.testing.assert_allclose(left.point(s), c.point(t * s), atol=1e-12)
        np.testing.assert_allclose(right.point(s), c.point(t + (1 - t) * s), atol=1e-12)


@given(curves(), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_restrict_matches_reparameterization(c, t0, t1):
    if abs(t1 - t0) < 1e-6:
        return
    try:
        sub = c.restrict(t0, t1)
    except ParameterError:
        return  # collapsed to a point
    for s in (0.0, 0.5, 1.0):
        np.testing.assert_allclose(sub.point(s), c.point(t0 + (t1 - t0) * s), atol=1e-12)


@given(curves())
def test_tight_bbox_contains_samples(c):
    x0, y0, x1, y1 = c.tight_bbox()
    pts = sample_polyline(c, 200)
    assert pts[:, 0].min() >= x0 - 1e-12 and pts[:, 0].max() <= x1 + 1e-12
    assert pts[:, 1].min() >= y0 - 1e-12 and pts[:, 1].max() <= y1 + 1e-12


@given(curves(), curves())
def test_intersection_is_symmetric(a, b):
    try:
        intersect_curves(a, b)
    except AssumptionViolation as e:
        if "overlap" in str(e):
            return  # an overlap is reported by one arbitrary representative
    ab = intersect_all(a, b)
    ba = intersect_all(b, a)
    assert len(ab) == len(ba)
    for h in ab:
        assert any(abs(h.t_a - g.t_b) < 1e-6 and abs(h.t_b - g.t_a) < 1e-6 for g in ba)


@given(curves(), point)
def test_closest_param_beats_sampling(c, p):
    t, d = closest_param(c, p)
    pts = sample_polyline(c, 2001)
    dense = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1]).min()
    assert d <= dense + 1e-9
    assert math.dist(c.point(t), p) == pytest.approx(d, abs=1e-12)


def test_self_overlap_detection():
    assert is_self_overlapping(QuadBezier((0, 0), (1, 1), (0.5, 0.5)))
    assert not is_self_overlapping(ARCH)
    assert not is_self_overlapping(QuadBezier((0, 0), (0.5, 0.5), (1, 1)))


def test_length_of_line():
    assert QuadBezier((0, 0), (0.3, 0.4), (0.6, 0.8)).length() == pytest.approx(1.0)


def test_tolerance_must_be_positive():
    with pytest.raises(ParameterError):
        intersect_curves(ARCH, ARCH, 0.0)
    assert GEOM_TOL > 0
