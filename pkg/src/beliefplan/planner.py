"""Sampling-based baseline planner over (position, covariance) states.

An RRT* loop: sample a belief (goal-biased in position), steer the
nearest tree node toward it, keep the edge if its discretized
chi-squared check passes, then choose-parent and rewire inside a fixed
radius under the path-cost metric. Labels for the learned pipeline and
the benchmark reference both come from here.
"""
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .belief import (BeliefPath, BeliefState, CollisionChecker, Covariance2,
                     belief_collision_free, edge_point_count, in_target,
                     path_cost, refined_point_count)
from .errors import InfeasibleStartError

# Half-width of the log-eigenvalue spread around ln(det)/2; bounds the
# eigenvalue aspect ratio of sampled covariances at 5.
LOG_ASPECT_SPREAD = 0.5 * math.log(5.0)

EDGE_CHECK_FACTOR = 2


@dataclass
class PlannerParams:
    max_iters: int = 1500
    steer_step: float = 0.15
    rewire_radius: float = 0.30
    cov_logdet_range: tuple = (-16.0, -11.0)
    chi2: float = 2.0
    alpha: float = 0.5
    goal_bias: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")
        if self.steer_step <= 0.0:
            raise ValueError("steer_step must be positive")
        if self.rewire_radius < self.steer_step:
            raise ValueError("rewire_radius must be >= steer_step")
        lo, hi = self.cov_logdet_range
        if lo > hi:
            raise ValueError("cov_logdet_range must be ordered")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must be a probability")


@dataclass
class PlannerResult:
    solved: bool
    path: Optional[BeliefPath]
    iterations_used: int
    wall_time: float


def _sample_cov_entries(rng: np.random.Generator, params: PlannerParams):
    """Rotation times log-uniform eigenvalues with ln det inside the range."""
    theta = rng.uniform(0.0, math.pi)
    lo, hi = params.cov_logdet_range
    s = rng.uniform(lo, hi)
    delta = rng.uniform(-LOG_ASPECT_SPREAD, LOG_ASPECT_SPREAD)
    l1 = math.exp(0.5 * s + delta)
    l2 = math.exp(0.5 * s - delta)
    c, sn = math.cos(theta), math.sin(theta)
    p11 = c * c * l1 + sn * sn * l2
    p12 = c * sn * (l1 - l2)
    p22 = sn * sn * l1 + c * c * l2
    return p11, p12, p22


def sample_belief(rng: np.random.Generator, params: PlannerParams) -> BeliefState:
    """Uniform position in the unit square, random SPD covariance."""
    x = rng.random(2)
    p11, p12, p22 = _sample_cov_entries(rng, params)
    return BeliefState(x, Covariance2(p11, p12, p22))


class _Tree:
    """Flat-array search tree; arrays are preallocated for the full budget."""

    def __init__(self, capacity: int, start: BeliefState):
        self.xs = np.empty((capacity, 2))
        self.p11 = np.empty(capacity)
        self.p12 = np.empty(capacity)
        self.p22 = np.empty(capacity)
        self.logdet = np.empty(capacity)
        self.cost = np.empty(capacity)
        self.edge_w = np.empty(capacity)
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.children = [[] for _ in range(capacity)]
        self.n = 0
        self._push(start.x, start.P.p11, start.P.p12, start.P.p22,
                   parent=-1, cost=0.0, edge_w=0.0)

    def _push(self, x, p11, p12, p22, parent, cost, edge_w):
        i = self.n
        self.xs[i] = x
        self.p11[i] = p11
        self.p12[i] = p12
        self.p22[i] = p22
        self.logdet[i] = math.log(p11 * p22 - p12 * p12)
        self.cost[i] = cost
        self.edge_w[i] = edge_w
        self.parent[i] = parent
        if parent >= 0:
            self.children[parent].append(i)
        self.n = i + 1
        return i

    def edge_costs_to(self, x, logdet, alpha):
        """Cost of the directed edge from every tree node to (x, logdet)."""
        n = self.n
        dx = self.xs[:n, 0] - x[0]
        dy = self.xs[:n, 1] - x[1]
        dist = np.sqrt(dx * dx + dy * dy)
        gain = 0.5 * (self.logdet[:n] - logdet)
        return dist, dist + alpha * np.maximum(0.0, gain)

    def repropagate(self, root: int):
        stack = list(self.children[root])
        while stack:
            j = stack.pop()
            self.cost[j] = self.cost[self.parent[j]] + self.edge_w[j]
            stack.extend(self.children[j])


def _edge_clear(checker: CollisionChecker, xa, pa, xb, pb, chi2: float) -> bool:
    dxy = (xb[0] - xa[0], xb[1] - xa[1])
    length = math.hypot(*dxy)
    m = refined_point_count(edge_point_count(length), EDGE_CHECK_FACTOR)
    t = np.arange(m) / (m - 1)
    xs = np.empty((m, 2))
    xs[:, 0] = xa[0] + t * dxy[0]
    xs[:, 1] = xa[1] + t * dxy[1]
    xs[-1] = xb
    p11 = pa[0] + t * (pb[0] - pa[0])
    p12 = pa[1] + t * (pb[1] - pa[1])
    p22 = pa[2] + t * (pb[2] - pa[2])
    p11[-1], p12[-1], p22[-1] = pb
    return checker.batch_clear(xs, p11, p12, p22, chi2)


def plan(scenario, params: PlannerParams) -> PlannerResult:
    """Run the planner on one scenario; never raises on mere failure to
    find a path (that is the not-solved status)."""
    t0 = time.perf_counter()
    checker = CollisionChecker(scenario.obstacles)
    start = scenario.start
    chi2 = params.chi2
    alpha = params.alpha

    if not belief_collision_free(start, checker, chi2):
        raise InfeasibleStartError("start belief violates the chi2 constraint")
    if in_target(start, scenario.target):
        path = BeliefPath([start, start], alpha=alpha, cost=0.0)
        return PlannerResult(True, path, 0, time.perf_counter() - t0)

    rng = np.random.default_rng(params.seed)
    tree = _Tree(params.max_iters + 1, start)
    goal_nodes = []
    target_center = scenario.target.center_point()

    for _ in range(params.max_iters):
        if rng.random() < params.goal_bias:
            x_s = target_center
            cov_s = _sample_cov_entries(rng, params)
        else:
            b = sample_belief(rng, params)
            x_s, cov_s = b.x, (b.P.p11, b.P.p12, b.P.p22)
        logdet_s = math.log(cov_s[0] * cov_s[2] - cov_s[1] * cov_s[1])

        dist, metric = tree.edge_costs_to(x_s, logdet_s, alpha)
        nearest = int(np.argmin(metric))
        d = float(dist[nearest])
        if d < 1e-12:
            continue
        f = min(1.0, params.steer_step / d)
        x_new = tree.xs[nearest] + f * (x_s - tree.xs[nearest])
        p_new = (tree.p11[nearest] + f * (cov_s[0] - tree.p11[nearest]),
                 tree.p12[nearest] + f * (cov_s[1] - tree.p12[nearest]),
                 tree.p22[nearest] + f * (cov_s[2] - tree.p22[nearest]))
        logdet_new = math.log(p_new[0] * p_new[2] - p_new[1] * p_new[1])

        if not checker.batch_clear(x_new[None, :], np.array([p_new[0]]),
                                   np.array([p_new[1]]), np.array([p_new[2]]), chi2):
            continue

        # Choose parent: cheapest feasible connection inside the radius.
        dist_new, edge_new = tree.edge_costs_to(x_new, logdet_new, alpha)
        near = np.nonzero(dist_new <= params.rewire_radius)[0]
        order = near[np.argsort(tree.cost[near] + edge_new[near], kind="stable")]
        parent = -1
        for i in order:
            if _edge_clear(checker, tree.xs[i],
                           (tree.p11[i], tree.p12[i], tree.p22[i]),
                           x_new, p_new, chi2):
                parent = int(i)
                break
        if parent < 0:
            continue
        w = float(edge_new[parent])
        new = tree._push(x_new, *p_new, parent=parent,
                         cost=tree.cost[parent] + w, edge_w=w)

        # Rewire neighbors through the new node when strictly cheaper.
        dxn = tree.xs[near, 0] - x_new[0]
        dyn = tree.xs[near, 1] - x_new[1]
        d_out = np.sqrt(dxn * dxn + dyn * dyn)
        gain_out = 0.5 * (logdet_new - tree.logdet[near])
        w_out = d_out + alpha * np.maximum(0.0, gain_out)
        for k, j in enumerate(near):
            j = int(j)
            if j == parent:
                continue
            c_cand = tree.cost[new] + w_out[k]
            if c_cand < tree.cost[j] - 1e-12:
                if _edge_clear(checker, x_new, p_new, tree.xs[j],
                               (tree.p11[j], tree.p12[j], tree.p22[j]), chi2):
                    tree.children[tree.parent[j]].remove(j)
                    tree.parent[j] = new
                    tree.children[new].append(j)
                    tree.edge_w[j] = w_out[k]
                    tree.cost[j] = c_cand
                    tree.repropagate(j)

        nb = BeliefState(x_new.copy(), Covariance2(*p_new))
        if in_target(nb, scenario.target):
            goal_nodes.append(new)

    if not goal_nodes:
        return PlannerResult(False, None, params.max_iters, time.perf_counter() - t0)

    best = min(goal_nodes, key=lambda g: (tree.cost[g], g))
    chain = []
    i = best
    while i >= 0:
        chain.append(i)
        i = int(tree.parent[i])
    chain.reverse()
    nodes = [BeliefState(tree.xs[i].copy(),
                         Covariance2(tree.p11[i], tree.p12[i], tree.p22[i]))
             for i in chain]
    path = BeliefPath(nodes, alpha=alpha, cost=path_cost(nodes, alpha))
    return PlannerResult(True, path, params.max_iters, time.perf_counter() - t0)
