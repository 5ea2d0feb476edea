"""Scenario generation and the labeled-corpus file format.

Each record stores one solved scenario: its geometry, the planner
inputs, and the four encoded channels. The format ("BSP1") is
little-endian and self-describing so corpora can be inspected without
this package.
"""
import struct
import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

import numpy as np

from .belief import BeliefState, CollisionChecker, Covariance2, TargetRegion, belief_collision_free
from .errors import FormatError, UnsatisfiableScenarioError
from .geometry import Circle, Triangle, contains, sample_obstacles
from .grids import Grid, GridStack, encode_label, encode_obstacles, encode_start, encode_target
from .planner import PlannerParams, plan

MAGIC = b"BSP1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")
_TAG_TRIANGLE = 1
_TAG_CIRCLE = 2


@dataclass
class ScenarioConfig:
    n_obstacles: int = 5
    obstacle_bounds: tuple = (0.04, 0.04, 0.96, 0.96)
    target_center: tuple = (0.85, 0.85)
    target_radius: float = 0.07
    start_cov: tuple = (1e-3, 0.0, 1e-3)
    chi2: float = 2.0
    alpha: float = 0.5
    max_start_draws: int = 1000


@dataclass
class Scenario:
    """One planning problem: obstacles, start belief, target disk."""
    obstacles: list
    start: BeliefState
    target: TargetRegion
    chi2: float
    alpha: float

    def checker(self) -> CollisionChecker:
        return CollisionChecker(self.obstacles)


@dataclass
class DatasetConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    planner: PlannerParams = field(default_factory=PlannerParams)
    count: int = 0
    n1: int = 64
    n2: int = 64
    seed: int = 0
    workers: int = 1


@dataclass
class DatasetSummary:
    requested: int
    written: int
    failures: int
    wall_time: float


def generate_scenario(rng: np.random.Generator, config: ScenarioConfig) -> Scenario:
    """Fixed target, random obstacles (kept off the target center), start
    position re-drawn until collision-free at chi2."""
    target = TargetRegion(config.target_center, config.target_radius)
    center = target.center_point()
    obstacles = []
    while len(obstacles) < config.n_obstacles:
        tri = sample_obstacles(rng, 1, config.obstacle_bounds)[0]
        if contains(tri, center):
            continue
        obstacles.append(tri)
    checker = CollisionChecker(obstacles)
    cov = Covariance2(*config.start_cov)
    for _ in range(config.max_start_draws):
        start = BeliefState(rng.random(2), cov)
        if belief_collision_free(start, checker, config.chi2):
            return Scenario(obstacles, start, target, config.chi2, config.alpha)
    raise UnsatisfiableScenarioError(
        f"no collision-free start in {config.max_start_draws} draws")


def record_seed(base: int, index: int) -> int:
    return base + index


def solve_record(config: DatasetConfig, index: int):
    """Generate, plan, and encode record `index`; None when unsolved."""
    seed = record_seed(config.seed, index)
    scenario = generate_scenario(np.random.default_rng([seed, 1]), config.scenario)
    result = plan(scenario, replace(config.planner, seed=seed,
                                    chi2=scenario.chi2, alpha=scenario.alpha))
    if not result.solved:
        return None
    n1, n2 = config.n1, config.n2
    stack = GridStack(
        O=encode_obstacles(scenario.obstacles, n1, n2),
        T=encode_target(scenario.target, n1, n2),
        I=encode_start(scenario.start.x, n1, n2),
        L=encode_label(result.path, scenario.chi2, n1, n2),
    )
    return scenario, stack


def _record_bytes(scenario: Scenario, stack: GridStack) -> bytes:
    parts = [struct.pack("<dd", scenario.chi2, scenario.alpha)]
    s = scenario.start
    parts.append(struct.pack("<5d", s.x[0], s.x[1], s.P.p11, s.P.p12, s.P.p22))
    t = scenario.target
    parts.append(struct.pack("<3d", t.center[0], t.center[1], t.radius))
    parts.append(struct.pack("<I", len(scenario.obstacles)))
    for o in scenario.obstacles:
        if isinstance(o, Triangle):
            v = o.vertices()
            parts.append(struct.pack("<B6d", _TAG_TRIANGLE, *v.ravel()))
        elif isinstance(o, Circle):
            parts.append(struct.pack("<B3d", _TAG_CIRCLE,
                                     o.center[0], o.center[1], o.radius))
        else:
            raise TypeError(f"unsupported obstacle {type(o)!r}")
    for g in (stack.O, stack.T, stack.I, stack.L):
        parts.append(g.values.astype("<f4").tobytes())
    return b"".join(parts)


def _solve_record_worker(args):
    config, index = args
    solved = solve_record(config, index)
    if solved is None:
        return None
    return _record_bytes(*solved)


def build_dataset(config: DatasetConfig, out_path) -> DatasetSummary:
    """Plan every scenario and append solved ones as records, in index
    order regardless of worker scheduling. Unsolved scenarios are skipped
    and counted so record <-> seed correspondence stays auditable."""
    t0 = time.perf_counter()
    written = failures = 0
    with open(out_path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, 0, config.n1, config.n2))
        jobs = ((config, i) for i in range(config.count))
        if config.workers > 1:
            with Pool(config.workers) as pool:
                for rec in pool.imap(_solve_record_worker, jobs, chunksize=1):
                    if rec is None:
                        failures += 1
                    else:
                        f.write(rec)
                        written += 1
        else:
            for job in jobs:
                rec = _solve_record_worker(job)
                if rec is None:
                    failures += 1
                else:
                    f.write(rec)
                    written += 1
        f.seek(8)
        f.write(struct.pack("<I", written))
    return DatasetSummary(config.count, written, failures, time.perf_counter() - t0)


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file while reading {what}")
    return data


def read_header(f):
    magic, version, count, n1, n2 = _HEADER.unpack(_read_exact(f, _HEADER.size, "header"))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}; expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    return count, n1, n2


def read_records(path):
    """Yield (Scenario, GridStack) in write order, validating as we go."""
    with open(path, "rb") as f:
        count, n1, n2 = read_header(f)
        for idx in range(count):
            what = f"record {idx}"
            try:
                chi2, alpha = struct.unpack("<dd", _read_exact(f, 16, what))
                sx, sy, p11, p12, p22 = struct.unpack("<5d", _read_exact(f, 40, what))
                cx, cy, r = struct.unpack("<3d", _read_exact(f, 24, what))
                (n_obs,) = struct.unpack("<I", _read_exact(f, 4, what))
                obstacles = []
                for _ in range(n_obs):
                    (tag,) = struct.unpack("<B", _read_exact(f, 1, what))
                    if tag == _TAG_TRIANGLE:
                        v = struct.unpack("<6d", _read_exact(f, 48, what))
                        obstacles.append(Triangle(v[0:2], v[2:4], v[4:6]))
                    elif tag == _TAG_CIRCLE:
                        c = struct.unpack("<3d", _read_exact(f, 24, what))
                        obstacles.append(Circle(c[0:2], c[2]))
                    else:
                        raise FormatError(f"{what}: unknown obstacle tag {tag}")
                channels = []
                for name in "OTIL":
                    raw = _read_exact(f, 4 * n1 * n2, f"{what} channel {name}")
                    vals = np.frombuffer(raw, dtype="<f4").astype(np.float64)
                    channels.append(Grid(n1, n2, vals))
            except FormatError:
                raise
            except struct.error as e:
                raise FormatError(f"{what}: {e}") from e
            scenario = Scenario(
                obstacles,
                BeliefState(np.array([sx, sy]), Covariance2(p11, p12, p22)),
                TargetRegion((cx, cy), r), chi2, alpha)
            yield scenario, GridStack(*channels)
        if f.read(1):
            raise FormatError("trailing bytes after the declared records")
