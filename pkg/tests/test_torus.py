import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coupledcircle.torus import (
    Arc,
    NoProperHull,
    arc_contains,
    arc_hull,
    arc_within,
    circ_dist,
    kernel_g,
    map_arc,
    signed_rep,
    wrap,
)

reals = st.floats(min_value=-50, max_value=50, allow_nan=False)
unit = st.floats(min_value=0.0, max_value=1.0, exclude_max=True)


@pytest.mark.parametrize("x, expected", [(1.25, 0.25), (-0.25, 0.75), (0.5, 0.5), (3.0, 0.0)])
def test_wrap_examples(x, expected):
    assert wrap(x) == expected


def test_wrap_tiny_negative_stays_below_one():
    assert wrap(-1e-18) == 0.0


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_wrap_rejects_nonfinite(bad):
    with pytest.raises(ValueError):
        wrap(bad)


@pytest.mark.parametrize("x, y, d", [(0.1, 0.9, 0.2), (0.0, 0.5, 0.5), (0.3, 0.3, 0.0)])
def test_circ_dist_examples(x, y, d):
    assert circ_dist(x, y) == pytest.approx(d, abs=1e-15)


@pytest.mark.parametrize("u, g", [(0.25, 0.25), (0.5, 0.0), (-0.5, 0.0), (0.75, -0.25), (1.0, 0.0)])
def test_kernel_examples(u, g):
    assert kernel_g(u) == pytest.approx(g, abs=1e-15)


def test_signed_rep_convention():
    assert signed_rep(0.5) == 0.5
    assert signed_rep(-0.5) == 0.5


@given(reals)
def test_kernel_odd(u):
    assert kernel_g(-u) == -kernel_g(u)


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_kernel_periodic(u):
    # away from the jump, where rounding u + 1 can flip the representative
    if abs(abs(signed_rep(u)) - 0.5) > 1e-9:
        assert kernel_g(u + 1.0) == pytest.approx(kernel_g(u), abs=1e-12)


@given(reals)
def test_wrap_range(x):
    w = wrap(x)
    assert 0.0 <= w < 1.0
    assert circ_dist(w, x) < 1e-12


@given(unit, unit, unit)
def test_circ_dist_metric(x, y, z):
    assert circ_dist(x, y) == circ_dist(y, x)
    assert 0.0 <= circ_dist(x, y) <= 0.5
    assert circ_dist(x, z) <= circ_dist(x, y) + circ_dist(y, z) + 1e-15


def test_arc_examples():
    assert arc_contains(Arc(0.9, 0.2), 0.05)
    assert not arc_contains(Arc(0.9, 0.2), 0.15)
    h = arc_hull([0.2, 0.3, 0.25])
    assert h.start == pytest.approx(0.2)
    assert h.length == pytest.approx(0.1)
    m = map_arc(lambda x: 2 * x, Arc(0.1, 0.2))
    assert m.start == pytest.approx(0.2)
    assert m.length == pytest.approx(0.4)


def test_arc_hull_wrapping_and_errors():
    h = arc_hull([0.95, 0.05, 0.0])
    assert h.start == pytest.approx(0.95)
    assert h.length == pytest.approx(0.1)
    assert arc_hull([0.4]).length == 0.0
    with pytest.raises(ValueError):
        arc_hull([])
    with pytest.raises(NoProperHull, match="no proper hull"):
        arc_hull(np.arange(8) / 8)
    with pytest.raises(NoProperHull):
        arc_hull([0.1, 0.6])

def test_arc_rejects_bad_length():
    with pytest.raises(ValueError):
        Arc(0.1, 1.5)


@given(st.lists(unit, min_size=1, max_size=30))
def test_arc_hull_contains_points(points):
    try:
        h = arc_hull(points)
    except NoProperHull:
        gaps = np.diff(np.concatenate([np.sort(points), [min(points) + 1.0]]))
        assert np.count_nonzero(gaps >= gaps.max() - 1e-15) > 1
        return
    assert all(arc_contains(h, p, 1e-12) for p in points)
    # minimality: the complement is a gap between points, so both ends are data points
    assert min(circ_dist(h.start, p) for p in points) < 1e-12
    assert min(circ_dist(h.end, p) for p in points) < 1e-12


def test_arc_within():
    assert arc_within(Arc(0.95, 0.05), Arc(0.9, 0.2))
    assert not arc_within(Arc(0.85, 0.1), Arc(0.9, 0.2))
    assert arc_within(Arc(0.85, 0.1), Arc(0.9, 0.2), tol=0.05)
