import struct

import numpy as np
import pytest

from beliefplan.belief import belief_collision_free
from beliefplan.data import (DatasetConfig, ScenarioConfig, build_dataset,
                             generate_scenario, read_records)
from beliefplan.errors import FormatError
from beliefplan.planner import PlannerParams

FAST_PLANNER = PlannerParams(max_iters=250, seed=0)


def small_config(count, seed=0, workers=1):
    return DatasetConfig(scenario=ScenarioConfig(), planner=FAST_PLANNER,
                         count=count, n1=32, n2=32, seed=seed, workers=workers)


def test_generate_scenario_no_obstacles():
    cfg = ScenarioConfig(n_obstacles=0)
    sc = generate_scenario(np.random.default_rng(1), cfg)
    assert sc.obstacles == []
    assert belief_collision_free(sc.start, [], sc.chi2)


def test_generate_scenario_default():
    sc = generate_scenario(np.random.default_rng(1), ScenarioConfig())
    assert len(sc.obstacles) == 5
    assert belief_collision_free(sc.start, sc.obstacles, sc.chi2)
    from beliefplan.geometry import contains
    assert not any(contains(o, sc.target.center_point()) for o in sc.obstacles)


def test_generate_scenario_deterministic():
    a = generate_scenario(np.random.default_rng(9), ScenarioConfig())
    b = generate_scenario(np.random.default_rng(9), ScenarioConfig())
    assert a.start.close_to(b.start)
    for oa, ob in zip(a.obstacles, b.obstacles):
        assert np.array_equal(oa.vertices(), ob.vertices())


def test_build_dataset_zero_records(tmp_path):
    out = tmp_path / "empty.bsp1"
    summary = build_dataset(small_config(0), out)
    assert summary.written == 0
    assert out.stat().st_size == 20  # header only
    assert list(read_records(out)) == []


def test_build_dataset_round_trip(tmp_path):
    out = tmp_path / "d.bsp1"
    summary = build_dataset(small_config(6), out)
    assert summary.written + summary.failures == 6
    assert summary.written >= 4
    records = list(read_records(out))
    assert len(records) == summary.written
    for scenario, stack in records:
        assert stack.O.n1 == 32
        assert set(np.unique(stack.O.values)) <= {0.0, 1.0}
        assert set(np.unique(stack.L.values)) <= {0.0, 1.0}
        assert len(scenario.obstacles) == 5
        assert belief_collision_free(scenario.start, scenario.obstacles, scenario.chi2)


def test_dataset_records_depend_only_on_their_seed(tmp_path):
    a = tmp_path / "a.bsp1"
    b = tmp_path / "b.bsp1"
    build_dataset(small_config(4, seed=0), a)
    build_dataset(small_config(2, seed=2), b)
    _, recs_a = _split_records(a)
    _, recs_b = _split_records(b)
    solved_aende = recs_a[-len(recs_b):] if recs_b else []
    assert recs_b == solved_aende


def _split_records(path):
    """Return (header, list of raw record byte strings) by re-walking the file."""
    raw = path.read_bytes()
    header, body = raw[:20], raw[20:]
    records = []
    offset = 0
    count = struct.unpack_from("<I", header, 8)[0]
    n1 = struct.unpack_from("<I", header, 12)[0]
    n2 = struct.unpack_from("<I", header, 16)[0]
    for _ in range(count):
        start = offset
        offset += 16 + 40 + 24
        (n_obs,) = struct.unpack_from("<I", body, offset)
        offset += 4
        for _ in range(n_obs):
            tag = body[offset]
            offset += 1 + (48 if tag == 1 else 24)
        offset += 4 * 4 * n1 * n2
        records.append(body[start:offset])
    return header, records


def test_read_records_bad_magic(tmp_path):
    p = tmp_path / "bad.bsp1"
    p.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(FormatError, match="magic"):
        next(iter(read_records(p)))


def test_read_records_truncation_names_record(tmp_path):
    out = tmp_path / "t.bsp1"
    build_dataset(small_config(3), out)
    data = out.read_bytes()
    out.write_bytes(data[:len(data) - 100])
    with pytest.raises(FormatError, match=r"record \d+"):
        list(read_records(out))


def test_read_records_version_check(tmp_path):
    p = tmp_path / "v.bsp1"
    p.write_bytes(b"BSP1" + struct.pack("<IIII", 99, 0, 8, 8))
    with pytest.raises(FormatError, match="version"):
        list(read_records(p))


def test_build_dataset_parallel_matches_serial(tmp_path):
    a = tmp_path / "serial.bsp1"
    b = tmp_path / "parallel.bsp1"
    build_dataset(small_config(4, workers=1), a)
    build_dataset(small_config(4, workers=2), b)
    assert a.read_bytes() == b.read_bytes()
