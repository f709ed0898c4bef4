from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nclab.geometry import Domain1D, Interval, IntervalSet
from nclab.kernel1d import (
    DivergentInteraction,
    check_order,
    l_interval,
    l_interval_v,
    l_sets_1d,
    per_s_1d,
    per_s_omega_1d,
)

INF = math.inf


def quad_oracle(s, I, J):
    """Independent 2D quadrature of |x - y|^(-1-s) over I x J."""
    f = lambda x, y: abs(x - y) ** (-1 - s)  # noqa: E731
    return float(mpmath.quad(f, [I[0], I[1]], [J[0], J[1]]))


def test_adjacent_unit_intervals():
    v = l_interval(0.5, Interval(0, 1), Interval(-1, 0))
    assert v == pytest.approx(4 * (2 - math.sqrt(2)), rel=1e-14)


def test_half_line_against_short_interval():
    for eps in (1e-1, 1e-3, 1e-6):
        assert l_interval(0.5, Interval(0, eps), Interval(-INF, 0)) == pytest.approx(4 * math.sqrt(eps), rel=1e-13)


def test_empty_and_symmetric_sets():
    assert l_interval(0.3, Interval(1, 1), Interval(-1, 0)) == 0.0
    A = IntervalSet.of((0, 1))
    B = IntervalSet.of((-1, 0), (1, 2))
    assert l_sets_1d(0.5, A, B) == pytest.approx(8 * (2 - math.sqrt(2)), rel=1e-14)
    assert l_sets_1d(0.5, IntervalSet(()), B) == 0.0


def test_per_omega_examples():
    om = Domain1D(-1, 1)
    E = IntervalSet.of((0, INF))
    assert per_s_omega_1d(0.5, om, E, E.complement()) == pytest.approx(4 * math.sqrt(2), rel=1e-14)
    assert per_s_1d(0.5, om, E) == pytest.approx(4 * math.sqrt(2), rel=1e-14)
    assert per_s_1d(0.5, om, IntervalSet.real_line()) == 0.0
    assert per_s_1d(0.5, om, E) == per_s_1d(0.5, om, E.complement())


@pytest.mark.parametrize("s", [0.05, 0.3, 0.5, 0.77, 0.95, 0.999])
def test_scaled_half_line_is_power_of_two(s):
    om = Domain1D(-1, 1)
    v = s * (1 - s) * per_s_1d(s, om, IntervalSet.of((0, INF)))
    assert v == pytest.approx(2 ** (1 - s), rel=1e-12)


def test_facing_half_lines_diverge():
    with pytest.raises(DivergentInteraction):
        l_interval(0.5, Interval(0, INF), Interval(-INF, 0))


def test_order_validation():
    for bad in (0.0, 1.0, -0.2, float("nan")):
        with pytest.raises(ValueError):
            check_order(bad)


def test_far_sets_bounded_by_domain_estimate():
    om = Domain1D(-1, 1)
    for s in (0.3, 0.7):
        for eps in (0.1, 0.5):
            A = IntervalSet.of((-INF, -1 - eps))
            B = IntervalSet.of((-1 + eps, 1))
            assert per_s_omega_1d(s, om, A, B) <= 2 * om.length / (s * eps**s)


def test_touching_endpoints_are_finite_and_continuous():
    s = 0.6
    base = l_interval(s, Interval(0, 1), Interval(1, 2))
    for d in (1e-3, 1e-6, 1e-9):
        near = l_interval(s, Interval(0, 1), Interval(1 + d, 2))
        # moving one end by d changes the value by at most 2 d^(1-s) / (s (1-s))
        assert math.isfinite(base) and 0 < base - near <= 2 * d ** (1 - s) / (s * (1 - s))


intervals = st.tuples(st.floats(-4, 4), st.floats(0.05, 3)).map(lambda t: (t[0], t[0] + t[1]))


@given(st.floats(0.05, 0.95), intervals, st.floats(0.02, 2), st.floats(0.05, 3), st.booleans())
def test_closed_form_matches_quadrature(s, I, gap, width, right):
    J = (I[1] + gap, I[1] + gap + width) if right else (I[0] - gap - width, I[0] - gap)
    exact = l_interval(s, Interval(*I), Interval(*J))
    assert exact == pytest.approx(quad_oracle(s, I, J), rel=1e-8)


def test_vectorized_matches_scalar(rng):
    s = 0.4
    a = rng.uniform(-3, 0, 50)
    b = a + rng.uniform(0.01, 1, 50)
    c = b + rng.uniform(0, 1, 50)
    d = c + rng.uniform(0.01, 2, 50)
    v = l_interval_v(s, a, b, c, d)
    ref = [l_interval(s, Interval(*x[:2]), Interval(*x[2:])) for x in zip(a, b, c, d)]
    np.testing.assert_allclose(v, ref, rtol=1e-13)


def random_sets(draw_pts):
    pts = sorted(set(draw_pts))
    return pts


points = st.lists(st.floats(-3, 3, allow_nan=False).map(lambda x: round(x, 3)), min_size=2, max_size=8, unique=True)


def _three_way(pts, labels):
    """Split the line at ``pts`` and assign each piece to A, B or C."""
    edges = [-INF] + sorted(pts) + [INF]
    sets = {0: [], 1: [], 2: []}
    for (lo, hi), k in zip(zip(edges, edges[1:]), labels):
        sets[k].append(Interval(lo, hi))
    return [IntervalSet(tuple(v)) for v in (sets[0], sets[1], sets[2])]


three_way = points.flatmap(
    lambda pts: st.tuples(st.just(pts), st.lists(st.integers(0, 2), min_size=len(pts) + 1, max_size=len(pts) + 1))
)


def _finite(s, om, *sets):
    try:
        return [per_s_1d(s, om, X) for X in sets]
    except DivergentInteraction:
        return None


@given(st.floats(0.1, 0.9), three_way)
def test_partition_identities(s, data):
    om = Domain1D(-1.5, 1.5)
    A, B, C = _three_way(*data)
    pers = _finite(s, om, A, B, C)
    if pers is None:
        return
    pA, pB, pC = pers
    ab = per_s_omega_1d(s, om, A, B)
    ac = per_s_omega_1d(s, om, A, C)
    assert pA == pytest.approx(ab + ac, rel=1e-12, abs=1e-12)
    assert ab == pytest.approx((pA + pB - pC) / 2, rel=1e-10, abs=1e-10 * max(pA, pB, pC, 1))
    assert ab == pytest.approx(per_s_omega_1d(s, om, B, A), rel=1e-14)


@given(st.floats(0.1, 0.9), three_way, st.floats(0.1, 1.4), st.floats(0.05, 1.0))
def test_domain_monotonicity_decomposition(s, data, c, w):
    om = Domain1D(-1.5, 1.5)
    inner = Domain1D(max(-1.5, c - 1.5), min(1.5, c - 1.5 + w))
    A, B, _ = _three_way(*data)
    try:
        diff = per_s_omega_1d(s, om, A, B) - per_s_omega_1d(s, inner, A, B)
    except DivergentInteraction:
        return
    ring = om.as_set.difference(inner.as_set)
    rhs = l_sets_1d(s, A.intersect(ring), B.intersect(inner.exterior)) + l_sets_1d(
        s, A.intersect(om.exterior), B.intersect(ring)
    )
    assert diff == pytest.approx(rhs, rel=1e-10, abs=1e-10)
