"""Belief-space types, path cost, and the chi-squared collision predicate.

A belief is a mean position in [0,1]^2 plus a 2x2 SPD covariance. A belief
is collision-free at confidence chi2 when every obstacle point has squared
Mahalanobis distance >= chi2; the check whitens obstacles through P^(-1/2)
and compares Euclidean distance against sqrt(chi2).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCovarianceError, MalformedPathError
from .geometry import Circle, Triangle, as_point, origin_min_distance_stacked

# Positional spacing used to discretize edges for collision checks and
# label rasterization; one 100x100 grid cell.
BASE_EDGE_STEP = 0.01

_DET_FLOOR = 1e-12


@dataclass(frozen=True)
class Covariance2:
    """Symmetric 2x2 covariance stored by its upper triangle."""
    p11: float
    p12: float
    p22: float

    def __post_init__(self):
        if not (math.isfinite(self.p11) and math.isfinite(self.p12)
                and math.isfinite(self.p22)):
            raise DegenerateCovarianceError("non-finite covariance entries")
        if self.p11 <= 0.0 or self.det() <= 0.0:
            raise DegenerateCovarianceError(
                f"covariance not positive definite: "
                f"[[{self.p11}, {self.p12}], [{self.p12}, {self.p22}]]")

    def det(self) -> float:
        return self.p11 * self.p22 - self.p12 * self.p12

    def logdet(self) -> float:
        d = self.det()
        if d < _DET_FLOOR:
            raise DegenerateCovarianceError(f"covariance nearly singular (det={d:g})")
        return math.log(d)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.p11, self.p12], [self.p12, self.p22]])

    @classmethod
    def from_matrix(cls, m) -> "Covariance2":
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (2, 2) or abs(m[0, 1] - m[1, 0]) > 1e-9:
            raise DegenerateCovarianceError("expected a symmetric 2x2 matrix")
        return cls(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))

    @classmethod
    def isotropic(cls, variance: float) -> "Covariance2":
        return cls(variance, 0.0, variance)


@dataclass(eq=False)
class BeliefState:
    x: np.ndarray
    P: Covariance2

    def __post_init__(self):
        self.x = as_point(self.x)

    def close_to(self, other: "BeliefState", tol: float = 0.0) -> bool:
        return (np.abs(self.x - other.x).max() <= tol
                and abs(self.P.p11 - other.P.p11) <= tol
                and abs(self.P.p12 - other.P.p12) <= tol
                and abs(self.P.p22 - other.P.p22) <= tol)


@dataclass(frozen=True)
class TargetRegion:
    """Disk of acceptable final positions; membership ignores covariance."""
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0.0:
            raise ValueError("target radius must be positive")
        cx, cy = self.center
        if not (0.0 <= cx - self.radius and cx + self.radius <= 1.0
                and 0.0 <= cy - self.radius and cy + self.radius <= 1.0):
            raise ValueError("target disk must lie inside the unit square")

    def center_point(self) -> np.ndarray:
        return np.array(self.center)


@dataclass(eq=False)
class BeliefPath:
    """Ordered belief states plus the weight and total cost of the route."""
    nodes: list
    alpha: float
    cost: float = field(default=None)

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise MalformedPathError("a path needs at least 2 nodes")
        if self.cost is None:
            self.cost = path_cost(self.nodes, self.alpha)

    def length(self) -> float:
        """Euclidean length of the positional trace."""
        xs = np.stack([n.x for n in self.nodes])
        return float(np.linalg.norm(np.diff(xs, axis=0), axis=1).sum())


def mahalanobis_sq(p, b: BeliefState) -> float:
    """(p - b.x)^T P^{-1} (p - b.x)."""
    return float(mahalanobis_sq_many(as_point(p)[None, :], b)[0])


def mahalanobis_sq_many(pts: np.ndarray, b: BeliefState) -> np.ndarray:
    """Squared Mahalanobis distance of each row of pts to belief b."""
    P = b.P
    det = P.det()
    if det < _DET_FLOOR:
        raise DegenerateCovarianceError(f"covariance nearly singular (det={det:g})")
    dx = pts[:, 0] - b.x[0]
    dy = pts[:, 1] - b.x[1]
    return (P.p22 * dx * dx - 2.0 * P.p12 * dx * dy + P.p11 * dy * dy) / det


def inv_sqrt_entries(p11, p12, p22):
    """Entries of P^(-1/2) for SPD 2x2 matrices; inputs may be arrays.

    Uses the closed form sqrt(P) = (P + sqrt(det) I) / sqrt(tr + 2 sqrt(det)),
    equivalent to the symmetric-eigendecomposition square root.
    """
    det = p11 * p22 - p12 * p12
    if np.any(det < _DET_FLOOR):
        raise DegenerateCovarianceError("covariance nearly singular in whitening")
    s = np.sqrt(det)
    denom = np.sqrt(p11 + p22 + 2.0 * s) * s
    return (p22 + s) / denom, -p12 / denom, (p11 + s) / denom


def _eig2_sym(p11, p12, p22):
    """Eigenvalues and first eigenvector of symmetric 2x2 matrices (arrays)."""
    tau = 0.5 * (p11 + p22)
    delta = np.sqrt((0.5 * (p11 - p22)) ** 2 + p12 ** 2)
    lam1 = tau + delta
    lam2 = tau - delta
    # Eigenvector for lam1; pick the better-conditioned expression per entry.
    ex = np.where(p11 >= p22, lam1 - p22, p12)
    ey = np.where(p11 >= p22, p12, lam1 - p11)
    n = np.hypot(ex, ey)
    ex = np.where(n > 0.0, ex / np.where(n > 0.0, n, 1.0), 1.0)
    ey = np.where(n > 0.0, ey / np.where(n > 0.0, n, 1.0), 0.0)
    return lam1, lam2, ex, ey


def _disk_min_mahalanobis(vx, vy, lam1, lam2, ex, ey, radius):
    """Min of z^T P^{-1} z over the disk |z - v| <= radius, batched.

    Solves the boundary Lagrange condition sum v_i^2/(1+mu*lam_i)^2 = r^2
    by bisection in the covariance eigenbasis.
    """
    w1 = vx * ex + vy * ey
    w2 = -vx * ey + vy * ex
    r2 = radius * radius
    vnorm2 = w1 * w1 + w2 * w2
    inside = vnorm2 <= r2

    lam_min = np.minimum(lam1, lam2)
    hi = np.maximum((np.sqrt(vnorm2) / radius - 1.0), 0.0) / np.maximum(lam_min, 1e-300)
    lo = np.zeros_like(hi)
    for _ in range(84):
        mid = 0.5 * (lo + hi)
        g = w1 * w1 / (1.0 + mid * lam1) ** 2 + w2 * w2 / (1.0 + mid * lam2) ** 2
        too_low = g > r2
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    mu = 0.5 * (lo + hi)
    val = mu * mu * (lam1 * w1 * w1 / (1.0 + mu * lam1) ** 2
                     + lam2 * w2 * w2 / (1.0 + mu * lam2) ** 2)
    return np.where(inside, 0.0, val)


class CollisionChecker:
    """Whitened min-distance queries against a fixed obstacle set.

    Triangle vertices are stacked once so that a batch of beliefs is
    checked against all obstacles in a handful of vectorized operations.
    """

    def __init__(self, obstacles):
        self.obstacles = list(obstacles)
        tris = [o for o in self.obstacles if isinstance(o, Triangle)]
        circles = [o for o in self.obstacles if isinstance(o, Circle)]
        if len(tris) + len(circles) != len(self.obstacles):
            raise TypeError("obstacles must be Triangle or Circle")
        self._tri = np.stack([o.vertices() for o in tris]) if tris else None
        self._circ_c = np.stack([o.center for o in circles]) if circles else None
        self._circ_r = np.array([o.radius for o in circles]) if circles else None

    def min_whitened_distance(self, xs, p11, p12, p22) -> np.ndarray:
        """Min over obstacles of whitened distance, per belief in the batch."""
        n = xs.shape[0]
        best = np.full(n, np.inf)
        if self._tri is not None:
            w11, w12, w22 = inv_sqrt_entries(p11, p12, p22)
            # dvx[i,k,v] = vertex v of triangle k relative to belief i
            dvx = self._tri[None, :, :, 0] - xs[:, None, None, 0]
            dvy = self._tri[None, :, :, 1] - xs[:, None, None, 1]
            ux = w11[:, None, None] * dvx + w12[:, None, None] * dvy
            uy = w12[:, None, None] * dvx + w22[:, None, None] * dvy
            best = origin_min_distance_stacked(ux, uy).min(axis=1)
        if self._circ_c is not None:
            lam1, lam2, ex, ey = _eig2_sym(p11, p12, p22)
            c = self._circ_c.shape[0]
            vx = (self._circ_c[None, :, 0] - xs[:, None, 0]).ravel()
            vy = (self._circ_c[None, :, 1] - xs[:, None, 1]).ravel()
            rep = lambda a: np.repeat(a, c)
            m2 = _disk_min_mahalanobis(vx, vy, rep(lam1), rep(lam2),
                                       rep(ex), rep(ey),
                                       np.tile(self._circ_r, n))
            best = np.minimum(best, np.sqrt(m2).reshape(n, c).min(axis=1))
        return best

    def batch_clear(self, xs, p11, p12, p22, chi2: float) -> bool:
        if not self.obstacles:
            return True
        d = self.min_whitened_distance(xs, p11, p12, p22)
        return bool(np.all(d >= math.sqrt(chi2)))


def belief_collision_free(b: BeliefState, obstacles, chi2: float) -> bool:
    """True iff every obstacle point is at squared Mahalanobis >= chi2 from b."""
    if chi2 <= 0.0:
        raise ValueError("chi2 must be positive")
    checker = obstacles if isinstance(obstacles, CollisionChecker) else CollisionChecker(obstacles)
    return checker.batch_clear(b.x[None, :], np.array([b.P.p11]),
                               np.array([b.P.p12]), np.array([b.P.p22]), chi2)


def edge_point_count(length: float) -> int:
    """Base number of interpolation points for an edge of the given length."""
    return int(math.ceil(length / BASE_EDGE_STEP)) + 2


def refined_point_count(base: int, factor: int) -> int:
    """Point count whose parameter grid contains the base grid exactly.

    t_j = j/(m-1) with m = (base-1)*factor + 1 reproduces every base grid
    value bitwise, so a finer check subsumes a coarser one.
    """
    return (base - 1) * factor + 1


def _interp_arrays(a: BeliefState, b: BeliefState, m: int):
    t = np.arange(m) / (m - 1)
    xs = a.x[None, :] + t[:, None] * (b.x - a.x)[None, :]
    p11 = a.P.p11 + t * (b.P.p11 - a.P.p11)
    p12 = a.P.p12 + t * (b.P.p12 - a.P.p12)
    p22 = a.P.p22 + t * (b.P.p22 - a.P.p22)
    xs[0] = a.x
    xs[-1] = b.x
    p11[0], p12[0], p22[0] = a.P.p11, a.P.p12, a.P.p22
    p11[-1], p12[-1], p22[-1] = b.P.p11, b.P.p12, b.P.p22
    return xs, p11, p12, p22


def interpolate_edge(a: BeliefState, b: BeliefState, steps: int) -> list:
    """`steps` beliefs with positions and covariance entries interpolated
    linearly; endpoints equal a and b exactly."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    xs, p11, p12, p22 = _interp_arrays(a, b, steps)
    return [BeliefState(xs[i], Covariance2(p11[i], p12[i], p22[i]))
            for i in range(steps)]


def edge_collision_free(a: BeliefState, b: BeliefState, checker: CollisionChecker,
                        chi2: float, factor: int = 2) -> bool:
    """Discretized chi-squared check along the straight belief-space edge."""
    base = edge_point_count(float(np.linalg.norm(b.x - a.x)))
    m = refined_point_count(base, factor)
    xs, p11, p12, p22 = _interp_arrays(a, b, m)
    return checker.batch_clear(xs, p11, p12, p22, chi2)


def edge_cost(a: BeliefState, b: BeliefState, alpha: float) -> float:
    """Segment length plus alpha times the clipped entropy reduction.

    The second term charges half the log-det decrease of the covariance
    (information gained along the edge); growing uncertainty is free.
    """
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    length = float(np.linalg.norm(a.x - b.x))
    gain = 0.5 * (a.P.logdet() - b.P.logdet())
    return length + alpha * max(0.0, gain)


def path_cost(nodes, alpha: float) -> float:
    if len(nodes) < 2:
        raise MalformedPathError("path cost needs at least 2 nodes")
    return float(sum(edge_cost(a, b, alpha) for a, b in zip(nodes[:-1], nodes[1:])))


def in_target(b: BeliefState, target: TargetRegion) -> bool:
    """Position-only membership in the (closed) target disk."""
    d = float(np.linalg.norm(b.x - target.center_point()))
    return d <= target.radius + 1e-12


def verify_path_feasible(nodes, obstacles, chi2: float, factor: int = 2) -> bool:
    """Recheck an entire path: every node and every interpolated edge belief
    must satisfy the chi-squared constraint at `factor` times the base
    edge resolution. Used as the feasibility audit for planner and
    reconstruction outputs."""
    checker = obstacles if isinstance(obstacles, CollisionChecker) else CollisionChecker(obstacles)
    for n in nodes:
        if not belief_collision_free(n, checker, chi2):
            return False
    for a, b in zip(nodes[:-1], nodes[1:]):
        if not edge_collision_free(a, b, checker, chi2, factor=factor):
            return False
    return True
