"""Image encodings of planning problems and solutions.

A scenario becomes three input channels on the grid
{(i/(N1-1), j/(N2-1))}: a binary obstacle mask O, a distance field T to
the target disk, and a distance field I to the start position. A solved
path becomes the binary tube label L marking grid points within
Mahalanobis chi2 of some belief along the path.
"""
import math
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .belief import (BeliefPath, edge_point_count, mahalanobis_sq_many,
                     _interp_arrays, BeliefState, Covariance2, TargetRegion)
from .errors import FormatError
from .geometry import Circle, Triangle, circle_contains_many, triangle_contains_many

SQRT2 = math.sqrt(2.0)


@dataclass(eq=False)
class Grid:
    """Scalar field sampled on the (N1, N2) unit-square lattice.

    values[i, j] belongs to the point (i/(N1-1), j/(N2-1)); storage is
    row-major with i as the row.
    """
    n1: int
    n2: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(self.n1, self.n2)
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("grids need at least 2 points per axis")
        if not np.all(np.isfinite(self.values)) or self.values.min() < 0.0:
            raise ValueError("grid values must be finite and nonnegative")

    def same_shape(self, other: "Grid") -> bool:
        return self.n1 == other.n1 and self.n2 == other.n2


@dataclass(eq=False)
class GridStack:
    """The three input channels and, when labeled, the tube channel."""
    O: Grid
    T: Grid
    I: Grid
    L: Optional[Grid] = None

    def __post_init__(self):
        grids = [self.O, self.T, self.I] + ([self.L] if self.L is not None else [])
        if not all(g.same_shape(self.O) for g in grids):
            raise ValueError("all channels must share one grid shape")


def grid_points(n1: int, n2: int) -> np.ndarray:
    """Lattice positions as an (n1*n2, 2) array, i-major."""
    i = np.arange(n1) / (n1 - 1)
    j = np.arange(n2) / (n2 - 1)
    xx, yy = np.meshgrid(i, j, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def encode_obstacles(obstacles, n1: int, n2: int) -> Grid:
    """Binary occupancy of the lattice points."""
    pts = grid_points(n1, n2)
    mask = np.zeros(pts.shape[0], dtype=bool)
    for o in obstacles:
        if isinstance(o, Triangle):
            mask |= triangle_contains_many(o, pts)
        elif isinstance(o, Circle):
            mask |= circle_contains_many(o, pts)
        else:
            raise TypeError(f"unsupported obstacle {type(o)!r}")
    return Grid(n1, n2, mask.astype(np.float64))


def encode_target(target: TargetRegion, n1: int, n2: int) -> Grid:
    """Distance from each lattice point to the target disk (0 inside)."""
    pts = grid_points(n1, n2)
    d = np.linalg.norm(pts - target.center_point(), axis=1)
    return Grid(n1, n2, np.maximum(0.0, d - target.radius))


def encode_start(x0, n1: int, n2: int) -> Grid:
    """Distance from each lattice point to the start position."""
    x0 = np.asarray(x0, dtype=np.float64)
    pts = grid_points(n1, n2)
    return Grid(n1, n2, np.linalg.norm(pts - x0, axis=1))


def min_mahalanobis_field(nodes, chi2: float, n1: int, n2: int) -> np.ndarray:
    """Min squared Mahalanobis distance from lattice points to the densely
    interpolated path."""
    pts = grid_points(n1, n2)
    best = np.full(pts.shape[0], np.inf)
    for a, b in zip(nodes[:-1], nodes[1:]):
        m = edge_point_count(float(np.linalg.norm(b.x - a.x)))
        xs, p11, p12, p22 = _interp_arrays(a, b, m)
        det = p11 * p22 - p12 * p12
        for k in range(m):
            dx = pts[:, 0] - xs[k, 0]
            dy = pts[:, 1] - xs[k, 1]
            d = (p22[k] * dx * dx - 2.0 * p12[k] * dx * dy + p11[k] * dy * dy) / det[k]
            np.minimum(best, d, out=best)
    return best


def encode_label(path: BeliefPath, chi2: float, n1: int, n2: int) -> Grid:
    """Binary tube: 1 where some path belief sees the point below chi2."""
    field = min_mahalanobis_field(path.nodes, chi2, n1, n2)
    return Grid(n1, n2, (field < chi2).astype(np.float64).reshape(n1, n2))


def nearest_grid_index(p, n1: int, n2: int):
    p = np.asarray(p, dtype=np.float64)
    return (int(round(p[0] * (n1 - 1))), int(round(p[1] * (n2 - 1))))


def write_image(grid: Grid, path) -> None:
    """Binary portable graymap, values scaled by v -> round(255 v / sqrt(2))."""
    v = grid.values
    if v.max() > SQRT2 + 1e-9:
        raise ValueError("grid values exceed sqrt(2); cannot scale to 8 bits")
    payload = np.clip(np.round(v * (255.0 / SQRT2)), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (grid.n2, grid.n1))
        f.write(payload.tobytes())


def read_image(path) -> Grid:
    """Inverse of write_image up to 8-bit quantization."""
    with open(path, "rb") as f:
        data = f.read()
    m = re.match(rb"^P5\s+(?:#[^\n]*\n\s*)?(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise FormatError(f"{path}: not a binary graymap")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    payload = data[m.end():]
    if len(payload) != width * height:
        raise FormatError(f"{path}: payload length {len(payload)} != {width * height}")
    raw = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Grid(height, width, raw.astype(np.float64) * (SQRT2 / 255.0))


def render_overlay(obstacles, path: BeliefPath, chi2: float, n1: int, n2: int) -> Grid:
    """Diagnostic image: obstacles mid-gray, tube brighter, centerline brightest."""
    out = encode_obstacles(obstacles, n1, n2).values * 0.6
    tube = encode_label(path, chi2, n1, n2).values
    out = np.maximum(out, tube * 1.0)
    for a, b in zip(path.nodes[:-1], path.nodes[1:]):
        m = edge_point_count(float(np.linalg.norm(b.x - a.x)))
        xs, _, _, _ = _interp_arrays(a, b, m)
        ii = np.clip(np.round(xs[:, 0] * (n1 - 1)).astype(int), 0, n1 - 1)
        jj = np.clip(np.round(xs[:, 1] * (n2 - 1)).astype(int), 0, n2 - 1)
        out[ii, jj] = 1.4
    return Grid(n1, n2, out)
