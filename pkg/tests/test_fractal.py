from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccur.errors import ConfigError, PreconditionError
from fraccur.fractal import (CircleSet, PointSet, SegmentSet, box_count, box_dimension, cantor_product,
                             cauchy_verdict, disk, koch_curve, koch_snowflake, square, star_domain, summability,
                             whitney, whitney_chain)


def clip_meets(a, b, lo, hi) -> bool:
    """Liang-Barsky: does the closed segment [a, b] meet the closed box [lo, hi]?"""
    t0, t1 = 0.0, 1.0
    for i in range(len(a)):
        d = b[i] - a[i]
        if d == 0:
            if a[i] < lo[i] or a[i] > hi[i]:
                return False
            continue
        u, v = (lo[i] - a[i]) / d, (hi[i] - a[i]) / d
        if u > v:
            u, v = v, u
        t0, t1 = max(t0, u), min(t1, v)
        if t0 > t1:
            return False
    return True


def test_point_counts():
    assert box_count(PointSet([[0.3, 0.7]]), 5) == 1
    assert box_count(PointSet([[0.5, 0.25]]), 3) == 4
    assert box_count(PointSet([[0.5, 0.3]]), 3) == 2
    assert box_count(PointSet([[0.5, 0.25, 0.125]]), 3) == 8


@settings(max_examples=40)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.integers(0, 4))
def test_segment_counts_match_clipping_oracle(c, k):
    a, b = np.array(c[:2]), np.array(c[2:])
    S = SegmentSet(a[None], b[None])
    got = {tuple(x) for x in S.cubes_meeting(k).tolist()}
    h = 2.0 ** -k
    want = set()
    for i in range(int(math.floor(-1 / h)) - 1, int(math.ceil(1 / h)) + 1):
        for j in range(int(math.floor(-1 / h)) - 1, int(math.ceil(1 / h)) + 1):
            if clip_meets(a, b, (i * h, j * h), ((i + 1) * h, (j + 1) * h)):
                want.add((i, j))
    assert got == want


def test_circle_counts_contain_sampled_cells():
    C = CircleSet((0.1, -0.2), 0.7)
    k = 6
    got = {tuple(x) for x in C.cubes_meeting(k).tolist()}
    t = np.linspace(0, 2 * np.pi, 20000)
    pts = np.column_stack([0.1 + 0.7 * np.cos(t), -0.2 + 0.7 * np.sin(t)])
    sampled = {tuple(x) for x in np.floor(pts * 2 ** k).astype(int).tolist()}
    assert sampled <= got
    # every counted cube lies within one cell diagonal of the circle
    c = (np.array(sorted(got)) + 0.5) / 2 ** k
    dist = np.abs(np.linalg.norm(c - [0.1, -0.2], axis=1) - 0.7)
    assert np.all(dist <= 2 ** -k * math.sqrt(2) / 2 + 1e-12)


@pytest.mark.parametrize("n", [0, 1, 3, 5])
def test_snowflake_area_closed_form(n):
    K = koch_snowflake(n)
    a0 = math.sqrt(3) / 4
    assert K.exact_measure() == pytest.approx(a0 * (8 / 5 - 3 / 5 * (4 / 9) ** n), rel=1e-12)
    assert K.vertices.shape[0] == 3 * 4 ** n


def test_koch_curve_endpoints():
    S = koch_curve(3)
    assert np.allclose(S.a[0], [0, 0]) and np.allclose(S.b[-1], [1, 0])
    assert S.a.shape[0] == 4 ** 3
    assert np.sum(np.linalg.norm(S.b - S.a, axis=1)) == pytest.approx((4 / 3) ** 3)


def test_level_above_resolution_rejected():
    with pytest.raises(PreconditionError):
        box_count(koch_curve(2), 10)


def test_disk_raster_area():
    assert disk().measure(8) == pytest.approx(math.pi, abs=2e-3)


def test_cantor_dimension():
    slope, _ = box_dimension(cantor_product(1 / 3, 2, 8), range(4, 11))
    assert slope == pytest.approx(2 * math.log(2) / math.log(3), abs=0.02)


def test_square_boundary_dimension_over_fine_levels():
    slope, _ = box_dimension(square().boundary, range(6, 11))
    assert slope == pytest.approx(1.0, abs=0.01)


def test_cauchy_verdict_on_geometric_terms():
    r, tail, verdict = cauchy_verdict([0.5 ** k for k in range(6)])
    assert verdict == "converging" and r == pytest.approx(0.5)
    assert tail == pytest.approx(0.5 ** 5)
    assert cauchy_verdict([1.0, 1.0, 1.0])[2] == "diverging"
    with pytest.raises(PreconditionError):
        cauchy_verdict([1.0, 0.5])


def test_koch_summability_threshold():
    K = koch_curve(7)
    assert summability(K, 1.3, 11).verdict == "converging"
    assert summability(K, 1.2, 11).verdict == "diverging"


def whitney_checks(U, kmax):
    w = whitney(U, kmax)
    d = w.d
    seen = {}
    for k, bases in w.collections.items():
        h = 2.0 ** -k
        for b in bases:
            # (A): the cube and its neighbours lie inside U (corners of the 3x cube)
            corners = (b - 1 + np.array(list(np.ndindex(*(2,) * d))) * 3) * h
            grid = np.array([b - 1 + np.array(o) for o in np.ndindex(*(3,) * d)], float)
            pts = np.concatenate([(grid + 0.5) * h, corners]) * (1 - 1e-12)
            assert np.all(U.contains(pts)), (k, b)
            # disjointness: refine to kmax and check cells are unique
            s = kmax - k
            for off in np.ndindex(*(1 << s,) * d):
                key = tuple(int(x) for x in (b << s) + np.array(off))
                assert key not in seen
                seen[key] = k
        if k > w.k0:
            assert w.counts[k] <= w.count_bound(k)
    return w


def test_whitney_disk():
    w = whitney_checks(disk(), 7)
    assert w.k0 == 2
    assert w.covered_measure() <= math.pi


def test_whitney_star_domain():
    whitney_checks(star_domain(np.random.default_rng(7)), 7)


def test_whitney_snowflake():
    whitney_checks(koch_snowflake(4), 6)


def test_whitney_interval_first_level():
    # closed cubes inside the open interval (0, 1) with both neighbours inside
    w = whitney(square(1), 6)
    assert w.k0 == 3
    assert w.collections[3].ravel().tolist() == [2, 3, 4, 5]


def test_whitney_square_coverage():
    w = whitney(square(), 9)
    assert w.covered_measure() >= 0.98


def test_whitney_chain_part_masses():
    dec = whitney_chain(disk(), 0.5, 6)
    w = dec.notes["whitney"]
    for T, k in zip(dec.parts, range(w.k0, 7)):
        assert T.mass() == w.counts[k] * 2.0 ** (-2 * k)
        assert T.boundary().mass() <= 4 * w.counts[k] * 2.0 ** -k
    assert dec.notes["verdict"] == "converging"


def test_whitney_rejects_non_regions():
    with pytest.raises(ConfigError):
        whitney(koch_curve(3), 4)
