"""Planar primitives: triangles, circles, distance and membership queries.

Obstacles are closed sets (boundary counts as inside). Points are
length-2 float arrays or anything convertible to one.
"""
from dataclasses import dataclass

import numpy as np

# Tolerance for sign-of-cross-product tests near triangle edges.
EDGE_EPS = 1e-12

# Rejection thresholds for sampled triangles.
MIN_TRIANGLE_AREA = 1e-3
MAX_TRIANGLE_DIAMETER = 0.5


def as_point(p) -> np.ndarray:
    q = np.asarray(p, dtype=np.float64)
    if q.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {q.shape}")
    return q


@dataclass
class Triangle:
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        self.v0 = as_point(self.v0)
        self.v1 = as_point(self.v1)
        self.v2 = as_point(self.v2)
        if self.area() <= 1e-9:
            raise ValueError("degenerate triangle (area <= 1e-9)")

    def area(self) -> float:
        e1 = self.v1 - self.v0
        e2 = self.v2 - self.v0
        return 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])

    def vertices(self) -> np.ndarray:
        return np.stack([self.v0, self.v1, self.v2])


@dataclass
class Circle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = as_point(self.center)
        self.radius = float(self.radius)
        if self.radius <= 0.0:
            raise ValueError("circle radius must be positive")


Obstacle = Triangle | Circle


def _cross_signs(v0, v1, v2, pts):
    """Per-point cross products of each triangle edge with the point offset.

    v0, v1, v2: (2,) arrays; pts: (n, 2). Returns (n, 3).
    """
    out = np.empty((pts.shape[0], 3))
    for k, (a, b) in enumerate(((v0, v1), (v1, v2), (v2, v0))):
        e = b - a
        d = pts - a
        out[:, k] = e[0] * d[:, 1] - e[1] * d[:, 0]
    return out


def triangle_contains_many(tri: Triangle, pts: np.ndarray) -> np.ndarray:
    """Boundary-inclusive membership for an (n, 2) array of points."""
    c = _cross_signs(tri.v0, tri.v1, tri.v2, pts)
    return (c.min(axis=1) >= -EDGE_EPS) | (c.max(axis=1) <= EDGE_EPS)


def circle_contains_many(circ: Circle, pts: np.ndarray) -> np.ndarray:
    d2 = ((pts - circ.center) ** 2).sum(axis=1)
    return d2 <= circ.radius * circ.radius + EDGE_EPS


def contains(obstacle: Obstacle, p) -> bool:
    """True iff p lies inside or on the boundary of the obstacle."""
    pts = as_point(p)[None, :]
    if isinstance(obstacle, Triangle):
        return bool(triangle_contains_many(obstacle, pts)[0])
    return bool(circle_contains_many(obstacle, pts)[0])


_NEXT_VERTEX = np.array([1, 2, 0])


def origin_min_distance_stacked(ux: np.ndarray, uy: np.ndarray) -> np.ndarray:
    """Distance from the origin to filled triangles; ux, uy are (..., 3)
    vertex coordinate arrays. One fused pass over all edges keeps the
    per-call overhead low on hot paths."""
    bx = ux[..., _NEXT_VERTEX]
    by = uy[..., _NEXT_VERTEX]
    abx = bx - ux
    aby = by - uy
    denom = abx * abx + aby * aby
    t = -(ux * abx + uy * aby) / np.where(denom > 0.0, denom, 1.0)
    np.clip(t, 0.0, 1.0, out=t)
    cx = ux + t * abx
    cy = uy + t * aby
    d2 = (cx * cx + cy * cy).min(axis=-1)
    cross = ux * by - uy * bx
    inside = (cross.min(axis=-1) >= -EDGE_EPS) | (cross.max(axis=-1) <= EDGE_EPS)
    return np.where(inside, 0.0, np.sqrt(d2))


def origin_to_triangle_distance(u0: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Distance from the origin to n filled triangles given as (n, 2) vertex arrays.

    This is the workhorse of whitened collision checks, where every query
    belief yields its own linearly-mapped triangle.
    """
    ux = np.stack([u0[:, 0], u1[:, 0], u2[:, 0]], axis=-1)
    uy = np.stack([u0[:, 1], u1[:, 1], u2[:, 1]], axis=-1)
    return origin_min_distance_stacked(ux, uy)


def min_distance(obstacle: Obstacle, p) -> float:
    """Euclidean distance from p to the obstacle set; 0 inside."""
    q = as_point(p)
    if isinstance(obstacle, Circle):
        return max(0.0, float(np.linalg.norm(q - obstacle.center)) - obstacle.radius)
    u0 = (obstacle.v0 - q)[None, :]
    u1 = (obstacle.v1 - q)[None, :]
    u2 = (obstacle.v2 - q)[None, :]
    return float(origin_to_triangle_distance(u0, u1, u2)[0])


def sample_obstacles(rng: np.random.Generator, count: int,
                     bounds=(0.0, 0.0, 1.0, 1.0)) -> list:
    """Draw `count` non-degenerate triangles with vertices inside `bounds`.

    Each triangle is re-drawn until its area is at least MIN_TRIANGLE_AREA
    and its diameter is at most MAX_TRIANGLE_DIAMETER, which keeps passage
    widths varied without any single obstacle dominating the workspace.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    xmin, ymin, xmax, ymax = bounds
    lo = np.array([xmin, ymin])
    hi = np.array([xmax, ymax])
    obstacles = []
    while len(obstacles) < count:
        verts = lo + rng.random((3, 2)) * (hi - lo)
        e1 = verts[1] - verts[0]
        e2 = verts[2] - verts[0]
        area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
        if area < MIN_TRIANGLE_AREA:
            continue
        diam = max(np.linalg.norm(verts[0] - verts[1]),
                   np.linalg.norm(verts[1] - verts[2]),
                   np.linalg.norm(verts[2] - verts[0]))
        if diam > MAX_TRIANGLE_DIAMETER:
            continue
        obstacles.append(Triangle(verts[0], verts[1], verts[2]))
    return obstacles
