import math

import numpy as np
import pytest

from beliefplan.belief import BeliefPath, BeliefState, Covariance2, TargetRegion
from beliefplan.errors import FormatError
from beliefplan.geometry import Circle, Triangle, contains
from beliefplan.grids import (
    SQRT2, Grid, GridStack, encode_label, encode_obstacles, encode_start,
    encode_target, grid_points, nearest_grid_index, read_image, write_image,
)

TRI = Triangle((0, 0), (1, 0), (0, 1))


def test_encode_obstacles_empty():
    g = encode_obstacles([], 8, 8)
    assert not g.values.any()


def test_encode_obstacles_full_cover():
    big = Triangle((-1, -1), (4, -1), (-1, 4))
    g = encode_obstacles([big], 5, 5)
    assert g.values.all()


def test_encode_obstacles_3x3_matches_contains_enumeration():
    g = encode_obstacles([TRI], 3, 3)
    expected = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            expected[i, j] = float(contains(TRI, (i / 2, j / 2)))
    assert np.array_equal(g.values, expected)
    # Frozen: the hypotenuse is inclusive, so only 3 far corners are out.
    assert g.values.sum() == 6


def test_encode_target_distances():
    t = TargetRegion((0.5, 0.5), 0.1)
    g = encode_target(t, 11, 11)
    assert g.values[5, 5] == 0.0                      # center
    assert g.values[5, 6] == pytest.approx(0.0)       # on the disk boundary
    assert g.values[5, 9] == pytest.approx(0.3)       # 0.4 radial - 0.1


def test_encode_start_distances():
    g = encode_start((0.0, 0.0), 2, 2)
    assert g.values[0, 0] == 0.0
    assert g.values[1, 1] == pytest.approx(math.sqrt(2))
    assert g.values[1, 0] == pytest.approx(1.0)


def test_channel_ranges():
    t = TargetRegion((0.5, 0.5), 0.1)
    assert encode_target(t, 16, 16).values.max() <= SQRT2
    assert encode_start((0.0, 1.0), 16, 16).values.max() <= SQRT2
    o = encode_obstacles([TRI], 16, 16).values
    assert set(np.unique(o)) <= {0.0, 1.0}


def test_distance_fields_are_lipschitz_on_grid():
    t = TargetRegion((0.3, 0.7), 0.05)
    for g in (encode_target(t, 33, 47), encode_start((0.9, 0.1), 33, 47)):
        v = g.values
        dx = np.abs(np.diff(v, axis=0)).max()
        dy = np.abs(np.diff(v, axis=1)).max()
        assert dx <= 1.0 / (g.n1 - 1) + 1e-9
        assert dy <= 1.0 / (g.n2 - 1) + 1e-9


def _straight_path(x0, x1, sigma2, alpha=0.0):
    P = Covariance2.isotropic(sigma2)
    return BeliefPath([BeliefState(np.array(x0), P), BeliefState(np.array(x1), P)],
                      alpha=alpha)


def test_label_capsule_geometry_oracle():
    # Constant-covariance single edge: the tube is a capsule of radius
    # sigma*sqrt(chi2) = 0.12. Compare against the exact capsule, skipping
    # a thin band around the boundary where rasterization may tip either way.
    sigma2, chi2 = 0.06 ** 2, 4.0
    radius = math.sqrt(sigma2 * chi2)
    path = _straight_path((0.2, 0.5), (0.8, 0.5), sigma2)
    g = encode_label(path, chi2, 101, 101)
    pts = grid_points(101, 101)
    a, b = np.array([0.2, 0.5]), np.array([0.8, 0.5])
    ab = b - a
    tt = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
    dist = np.linalg.norm(pts - (a + tt[:, None] * ab), axis=1)
    inside = g.values.ravel() == 1.0
    clear = np.abs(dist - radius) > 5e-3
    assert np.array_equal(inside[clear], (dist < radius)[clear])
    # The spec'd spot check: half-radius perpendicular offset is inside.
    i, j = nearest_grid_index((0.5, 0.56), 101, 101)
    assert g.values[i, j] == 1.0


def test_label_marks_node_positions():
    path = _straight_path((0.11, 0.23), (0.77, 0.41), 1e-4)
    g = encode_label(path, 2.0, 64, 64)
    for node in path.nodes:
        i, j = nearest_grid_index(node.x, 64, 64)
        assert g.values[i, j] == 1.0


def test_label_far_points_zero():
    sigma2 = 1e-4
    path = _straight_path((0.2, 0.2), (0.4, 0.2), sigma2)
    chi2 = 2.0
    g = encode_label(path, chi2, 64, 64)
    pts = grid_points(64, 64)
    # Mahalanobis lower bound: farther than sqrt(chi2*lam_max) from every
    # node position (plus the edge span) implies label 0.
    far = np.minimum(
        np.linalg.norm(pts - np.array([0.2, 0.2]), axis=1),
        np.linalg.norm(pts - np.array([0.4, 0.2]), axis=1),
    ) > math.sqrt(chi2 * sigma2) + 0.2
    assert not g.values.ravel()[far].any()


def test_label_monotone_in_chi2():
    rng = np.random.default_rng(6)
    nodes = [BeliefState(rng.random(2) * 0.8 + 0.1,
                         Covariance2.isotropic(10 ** rng.uniform(-4, -2.5)))
             for _ in range(4)]
    path = BeliefPath(nodes, alpha=0.0)
    small = encode_label(path, 0.5, 48, 48).values
    large = encode_label(path, 3.0, 48, 48).values
    assert np.all(small <= large)


def test_label_shrinks_to_centerline():
    path = _straight_path((0.1, 0.5), (0.9, 0.5), 1e-2)
    thin = encode_label(path, 1e-6, 64, 64)
    assert thin.values.sum() <= 70  # roughly one pixel-wide trace


def test_image_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    g = Grid(17, 23, rng.random((17, 23)) * SQRT2)
    p = tmp_path / "g.pgm"
    write_image(g, p)
    back = read_image(p)
    assert back.n1 == 17 and back.n2 == 23
    assert np.abs(back.values - g.values).max() <= SQRT2 / 255.0


def test_image_zero_payload(tmp_path):
    p = tmp_path / "z.pgm"
    write_image(Grid(4, 4, np.zeros((4, 4))), p)
    payload = p.read_bytes().split(b"255\n", 1)[1]
    assert payload == bytes(16)


def test_image_2x2_payload_is_4_bytes(tmp_path):
    p = tmp_path / "s.pgm"
    write_image(Grid(2, 2, np.ones((2, 2))), p)
    data = p.read_bytes()
    assert data.startswith(b"P5\n2 2\n255\n")
    assert len(data) - len(b"P5\n2 2\n255\n") == 4


def test_image_malformed_header(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(FormatError):
        read_image(p)


def test_image_truncated_payload(tmp_path):
    p = tmp_path / "short.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
    with pytest.raises(FormatError):
        read_image(p)


def test_gridstack_shape_check():
    a = Grid(4, 4, np.zeros((4, 4)))
    b = Grid(5, 4, np.zeros((5, 4)))
    with pytest.raises(ValueError):
        GridStack(O=a, T=b, I=a)
