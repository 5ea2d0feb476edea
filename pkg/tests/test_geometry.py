import numpy as np
import pytest

from beliefplan.geometry import (
    Circle, Triangle, contains, min_distance, origin_to_triangle_distance,
    sample_obstacles,
)

TRI = Triangle((0, 0), (1, 0), (0, 1))


def test_triangle_contains_interior_point():
    assert contains(TRI, (0.25, 0.25))


def test_triangle_excludes_point_beyond_hypotenuse():
    assert not contains(TRI, (0.9, 0.9))


def test_circle_boundary_is_inside():
    c = Circle((0.5, 0.5), 0.1)
    assert contains(c, (0.5, 0.6))


def test_degenerate_triangle_rejected():
    with pytest.raises(ValueError):
        Triangle((0, 0), (0.5, 0.5), (1, 1))


def test_circle_radial_distance():
    c = Circle((0.5, 0.5), 0.1)
    assert min_distance(c, (0.5, 0.8)) == pytest.approx(0.2, abs=1e-12)


def test_triangle_interior_distance_zero():
    assert min_distance(TRI, (0.5, 0.25)) == 0.0


def test_triangle_corner_distance_matches_boundary_sampling_oracle():
    # Oracle: dense sampling of the triangle boundary. Frozen value sqrt(2)/2.
    p = np.array([1.0, 1.0])
    ts = np.linspace(0.0, 1.0, 20001)[:, None]
    verts = TRI.vertices()
    best = np.inf
    for a, b in ((verts[0], verts[1]), (verts[1], verts[2]), (verts[2], verts[0])):
        pts = a + ts * (b - a)
        best = min(best, np.linalg.norm(pts - p, axis=1).min())
    assert best == pytest.approx(0.7071067811865476, abs=1e-4)
    assert min_distance(TRI, p) == pytest.approx(0.7071067811865476, abs=1e-12)


def test_sample_obstacles_empty():
    rng = np.random.default_rng(0)
    assert sample_obstacles(rng, 0) == []


def test_sample_obstacles_count_and_bounds():
    rng = np.random.default_rng(7)
    obs = sample_obstacles(rng, 5, bounds=(0.1, 0.1, 0.9, 0.9))
    assert len(obs) == 5
    for tri in obs:
        v = tri.vertices()
        assert np.all(v >= 0.1) and np.all(v <= 0.9)
        assert tri.area() >= 1e-3
        d = max(np.linalg.norm(v[i] - v[j]) for i in range(3) for j in range(i))
        assert d <= 0.5


def test_sample_obstacles_deterministic():
    a = sample_obstacles(np.random.default_rng(42), 5)
    b = sample_obstacles(np.random.default_rng(42), 5)
    for ta, tb in zip(a, b):
        assert np.array_equal(ta.vertices(), tb.vertices())


def test_contains_iff_zero_distance():
    rng = np.random.default_rng(3)
    obstacles = sample_obstacles(rng, 8) + [Circle((0.4, 0.6), 0.15)]
    pts = rng.random((400, 2))
    for o in obstacles:
        for p in pts:
            if contains(o, p):
                assert min_distance(o, p) == 0.0
            else:
                assert min_distance(o, p) > 0.0


def test_min_distance_is_1_lipschitz():
    rng = np.random.default_rng(11)
    obstacles = sample_obstacles(rng, 6) + [Circle((0.7, 0.3), 0.1)]
    for o in obstacles:
        p = rng.random((200, 2))
        q = rng.random((200, 2))
        for a, b in zip(p, q):
            lhs = abs(min_distance(o, a) - min_distance(o, b))
            assert lhs <= np.linalg.norm(a - b) + 1e-9


def test_origin_triangle_distance_batch_matches_scalar():
    rng = np.random.default_rng(5)
    u = rng.normal(size=(50, 3, 2))
    d = origin_to_triangle_distance(u[:, 0], u[:, 1], u[:, 2])
    for i in range(50):
        tri = Triangle(u[i, 0], u[i, 1], u[i, 2])
        assert d[i] == pytest.approx(min_distance(tri, (0.0, 0.0)), abs=1e-12)
