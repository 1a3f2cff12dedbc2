import math

import numpy as np
import pytest

from trajsearch.geometry import (
    Mbr,
    PlanarPoint,
    ProjectionRef,
    euclid,
    mbr_of,
    mindist_point_mbr,
    point_segment_distance,
    project,
)


def test_euclid_345():
    assert euclid(PlanarPoint(0, 0), PlanarPoint(3, 4)) == 5.0


def test_euclid_identity():
    assert euclid(PlanarPoint(5, 3), PlanarPoint(5, 3)) == 0.0


def test_euclid_unit():
    assert euclid(PlanarPoint(6, 3), PlanarPoint(5, 3)) == 1.0


def test_segment_distance_worked_example():
    d = point_segment_distance(PlanarPoint(9, 5), PlanarPoint(5, 3), PlanarPoint(9, 7))
    assert d == pytest.approx(math.sqrt(2), abs=1e-12)


def test_segment_distance_interior_projection():
    assert point_segment_distance(PlanarPoint(0, 1), PlanarPoint(0, 0), PlanarPoint(2, 0)) == 1.0


def test_segment_distance_endpoint_clamp():
    d = point_segment_distance(PlanarPoint(-1, 1), PlanarPoint(0, 0), PlanarPoint(2, 0))
    assert d == pytest.approx(math.sqrt(2), abs=1e-12)


def test_segment_distance_degenerate():
    assert point_segment_distance(PlanarPoint(3, 4), PlanarPoint(0, 0), PlanarPoint(0, 0)) == 5.0


def test_mbr_of_basic():
    m = mbr_of([PlanarPoint(1, 2), PlanarPoint(3, 3), PlanarPoint(5, 3)])
    assert (m.min_x, m.min_y, m.max_x, m.max_y) == (1, 2, 5, 3)
    assert m.area == 4.0


def test_mbr_of_single_point():
    m = mbr_of([PlanarPoint(2, 7)])
    assert m.area == 0.0
    assert (m.min_x, m.max_x) == (2, 2)


def test_mbr_of_collinear():
    assert mbr_of([PlanarPoint(0, 1), PlanarPoint(4, 1), PlanarPoint(2, 1)]).area == 0.0


def test_mbr_of_empty_rejected():
    with pytest.raises(ValueError):
        mbr_of([])


def test_mbr_of_order_invariant():
    rng = np.random.default_rng(0)
    pts = [PlanarPoint(x, y) for x, y in rng.uniform(-10, 10, (12, 2))]
    m = mbr_of(pts)
    for _ in range(5):
        perm = list(pts)
        rng.shuffle(perm)
        assert mbr_of(perm) == m


def test_mindist_edge_interior_corner():
    m = Mbr(0, 0, 10, 1)
    assert mindist_point_mbr(PlanarPoint(5, -0.1), m) == pytest.approx(0.1)
    assert mindist_point_mbr(PlanarPoint(3, 0.5), m) == 0.0
    assert mindist_point_mbr(PlanarPoint(12, 5), m) == pytest.approx(math.sqrt(20))


def test_mindist_is_lower_bound():
    rng = np.random.default_rng(1)
    for _ in range(200):
        lo = rng.uniform(-5, 5, 2)
        hi = lo + rng.uniform(0, 5, 2)
        m = Mbr(lo[0], lo[1], hi[0], hi[1])
        p = PlanarPoint(*rng.uniform(-10, 10, 2))
        q = PlanarPoint(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]))
        assert euclid(p, q) >= mindist_point_mbr(p, m) - 1e-12


def test_triangle_inequality():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a, b, c = (PlanarPoint(*xy) for xy in rng.uniform(-10, 10, (3, 2)))
        assert euclid(a, c) <= euclid(a, b) + euclid(b, c) + 1e-12


def test_segment_distance_bounded_by_endpoints():
    rng = np.random.default_rng(3)
    for _ in range(200):
        p, a, b = (PlanarPoint(*xy) for xy in rng.uniform(-10, 10, (3, 2)))
        d = point_segment_distance(p, a, b)
        assert d <= min(euclid(p, a), euclid(p, b)) + 1e-12


def test_project_formula():
    ref = ProjectionRef(0.0, 0.0, 6_371_000.0)
    p = project(0.001, 0.0, ref)
    assert p.x == pytest.approx(6_371_000.0 * 0.001 * math.pi / 180.0, rel=1e-12)
    assert p.x == pytest.approx(111.19, abs=0.01)
    assert p.y == 0.0
    q = project(0.0, 0.001, ref)
    assert q.y == pytest.approx(111.19, abs=0.01)
    assert q.x == 0.0


def test_project_origin():
    ref = ProjectionRef(12.5, 55.7)
    p = project(12.5, 55.7, ref)
    assert (p.x, p.y) == (0.0, 0.0)


def test_projection_ref_validation():
    with pytest.raises(ValueError):
        ProjectionRef(200.0, 0.0)
    with pytest.raises(ValueError):
        ProjectionRef(0.0, 0.0, earth_radius=-1.0)


def test_mbr_validation():
    with pytest.raises(ValueError):
        Mbr(1, 0, 0, 1)
