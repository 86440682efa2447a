"""Geometry tests: geodesic metric axioms and the junction equivalence class."""

import pytest
from hypothesis import given, strategies as st

from spiderhjb.network import NetworkPoint, StarNetwork


@pytest.fixture
def star():
    return StarNetwork(ray_count=3, radius=10.0)


def test_distance_same_ray(star):
    assert star.distance(NetworkPoint(1.5, 2), NetworkPoint(0.5, 2)) == 1.0


def test_distance_through_junction(star):
    assert star.distance(NetworkPoint(1.5, 1), NetworkPoint(0.5, 2)) == 2.0


def test_vertex_is_one_point(star):
    assert star.distance(NetworkPoint(0.0, 1), NetworkPoint(0.0, 3)) == 0.0
    assert NetworkPoint(0.0, 1) == NetworkPoint(0.0, 3)
    assert hash(NetworkPoint(0.0, 1)) == hash(NetworkPoint(0.0, 3))


def test_canonicalize(star):
    assert star.canonicalize(NetworkPoint(0.0, 3)) == NetworkPoint(0.0, 1)
    assert star.canonicalize(NetworkPoint(0.0, 3)).ray == 1
    assert star.canonicalize(NetworkPoint(0.7, 2)) == NetworkPoint(0.7, 2)
    assert star.canonicalize(NetworkPoint(0.0, 1)) == NetworkPoint(0.0, 1)


def test_invalid_points_rejected(star):
    with pytest.raises(ValueError):
        NetworkPoint(-0.1, 1)
    with pytest.raises(ValueError):
        NetworkPoint(float("nan"), 1)
    with pytest.raises(ValueError):
        NetworkPoint(1.0, 0)
    with pytest.raises(ValueError):
        StarNetwork(ray_count=1, radius=1.0)
    with pytest.raises(ValueError):
        StarNetwork(ray_count=2, radius=0.0)
    with pytest.raises(ValueError):
        star.distance(NetworkPoint(11.0, 1), NetworkPoint(0.0, 1))


points = st.builds(
    NetworkPoint,
    st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
    st.integers(min_value=1, max_value=3),
)


@given(points, points, points)
def test_metric_axioms(p, q, r):
    star = StarNetwork(ray_count=3, radius=10.0)
    d = star.distance
    assert d(p, q) == d(q, p)
    assert d(p, q) <= d(p, r) + d(r, q) + 1e-12
    assert (d(p, q) == 0.0) == (star.canonicalize(p) == star.canonicalize(q))
