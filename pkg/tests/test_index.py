import numpy as np
import pytest

from trajsearch.distance import find_pivotal
from trajsearch.geometry import PlanarPoint, mindist_point_mbr
from trajsearch.index import (
    IndexChecksumError,
    IndexFormatError,
    IndexVersionError,
    QueryConfig,
    SegmentIndex,
    build_index,
    load_store,
    save_store,
    segment_store,
)
from trajsearch.model import TrajectoryStore, make_trajectory
from trajsearch.segmentation import SegmentationConfig

from conftest import random_store


def _world(seed, n_traj=40):
    rng = np.random.default_rng(seed)
    store = random_store(rng, n_traj=n_traj, n_range=(8, 30), extent=200.0, step=5.0)
    return build_index(store, SegmentationConfig(3, 6), node_capacity=4), rng


def _linear_range(store, p, r):
    out = []
    for t in store.trajectories():
        x, z, d = find_pivotal(p, t)
        if d <= r:
            out.append((t.traj_id, x, z, d))
    out.sort(key=lambda e: (e[3], e[0]))
    return out


def test_query_config_validation():
    with pytest.raises(ValueError):
        QueryConfig(k=0, r=1.0)
    with pytest.raises(ValueError):
        QueryConfig(k=5)
    with pytest.raises(ValueError):
        QueryConfig(k=5, r=1.0, rate=2.0)
    with pytest.raises(ValueError):
        QueryConfig(k=5, rate=0.5)
    with pytest.raises(ValueError):
        QueryConfig(k=5, r=-1.0)


def test_tree_invariants_after_bulk_load():
    index, _ = _world(0)
    index.check_invariants()
    assert len(index) == len(index.store.segment_refs())


def test_candidate_segments_complete():
    index, rng = _world(1)
    refs = index.store.segment_refs()
    for _ in range(30):
        p = PlanarPoint(*rng.uniform(-50, 250, 2))
        r = float(rng.uniform(0, 100))
        got = {(s.traj_id, s.seg_index) for s in index.candidate_segments(p, r)}
        want = {
            (s.traj_id, s.seg_index) for s in refs if mindist_point_mbr(p, s.mbr) <= r
        }
        assert got == want


def test_range_query_matches_linear_scan():
    index, rng = _world(2)
    for _ in range(25):
        p = PlanarPoint(*rng.uniform(-50, 250, 2))
        r = float(rng.uniform(5, 120))
        got = index.range_query(p, QueryConfig(k=5, r=r))
        assert got == _linear_range(index.store, p, r)


def test_rate_mode_returns_enough_candidates():
    index, rng = _world(3)
    n_total = len(index.store)
    for rate, k in [(1.0, 3), (2.0, 5), (3.0, 20)]:
        p = PlanarPoint(*rng.uniform(0, 200, 2))
        res = index.range_query(p, QueryConfig(k=k, rate=rate))
        want = min(int(np.ceil(rate * k)), n_total)
        assert len(res) >= want
        dists = [d for _, _, _, d in res]
        assert dists == sorted(dists)


def test_insert_matches_bulk_rebuild():
    rng = np.random.default_rng(4)
    store = random_store(rng, n_traj=25, n_range=(8, 20), extent=150.0, step=4.0)
    seg = segment_store(store, SegmentationConfig(3, 6))
    refs = seg.segment_refs()

    bulk = SegmentIndex(seg, node_capacity=4)
    bulk.bulk_load(refs)

    incr = SegmentIndex(seg, node_capacity=4)
    for s in refs:
        incr.insert_segment(s)
    incr.check_invariants()

    for _ in range(20):
        p = PlanarPoint(*rng.uniform(-20, 170, 2))
        r = float(rng.uniform(5, 80))
        a = {(s.traj_id, s.seg_index) for s in bulk.candidate_segments(p, r)}
        b = {(s.traj_id, s.seg_index) for s in incr.candidate_segments(p, r)}
        assert a == b


def test_insert_duplicate_rejected():
    index, _ = _world(5, n_traj=5)
    ref = index.store.segment_refs()[0]
    with pytest.raises(ValueError):
        index.insert_segment(ref)


def test_empty_index_queries():
    index = SegmentIndex(TrajectoryStore(), node_capacity=4)
    index.bulk_load([])
    assert index.candidate_segments(PlanarPoint(0, 0), 10.0) == []
    assert index.range_query(PlanarPoint(0, 0), QueryConfig(k=3, r=10.0)) == []
    index.check_invariants()


def test_persistence_roundtrip_bitwise(tmp_path):
    index, rng = _world(6)
    path = tmp_path / "world.svti"
    index.save(path)
    loaded = SegmentIndex.load(path)
    loaded.check_invariants()

    assert loaded.node_capacity == index.node_capacity
    assert loaded.seg_cfg == index.seg_cfg
    assert sorted(loaded.store.ids()) == sorted(index.store.ids())
    for tid in index.store.ids():
        a, b = index.store.get(tid), loaded.store.get(tid)
        assert a.xs.tobytes() == b.xs.tobytes()
        assert a.ys.tobytes() == b.ys.tobytes()
        assert np.array_equal(a.seg_starts, b.seg_starts)
        assert np.array_equal(a.seg_ends, b.seg_ends)

    # Re-saving the loaded index reproduces the file bit for bit.
    path2 = tmp_path / "again.svti"
    loaded.save(path2)
    assert path.read_bytes() == path2.read_bytes()

    for _ in range(10):
        p = PlanarPoint(*rng.uniform(0, 200, 2))
        assert loaded.range_query(p, QueryConfig(k=5, r=50.0)) == index.range_query(
            p, QueryConfig(k=5, r=50.0)
        )


def test_store_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    store = random_store(rng, n_traj=6, n_range=(5, 10), extent=50.0, step=2.0)
    path = tmp_path / "raw.svti"
    save_store(store, path)
    back = load_store(path)
    assert sorted(back.ids()) == sorted(store.ids())
    for tid in store.ids():
        assert store.get(tid).xs.tobytes() == back.get(tid).xs.tobytes()


def test_load_errors(tmp_path):
    index, _ = _world(8, n_traj=4)
    good = tmp_path / "good.svti"
    index.save(good)
    raw = bytearray(good.read_bytes())

    empty = tmp_path / "empty.svti"
    empty.write_bytes(b"")
    with pytest.raises(IndexFormatError):
        SegmentIndex.load(empty)

    bad_magic = tmp_path / "magic.svti"
    bad_magic.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(IndexVersionError):
        SegmentIndex.load(bad_magic)

    bad_version = tmp_path / "version.svti"
    bad_version.write_bytes(bytes(raw[:4]) + b"\xff\xff" + bytes(raw[6:]))
    with pytest.raises(IndexVersionError):
        SegmentIndex.load(bad_version)

    flipped = bytearray(raw)
    flipped[20] ^= 0xFF
    bad_crc = tmp_path / "crc.svti"
    bad_crc.write_bytes(bytes(flipped))
    with pytest.raises(IndexChecksumError):
        SegmentIndex.load(bad_crc)

    truncated = tmp_path / "trunc.svti"
    truncated.write_bytes(bytes(raw[: len(raw) // 2]))
    with pytest.raises((IndexFormatError, IndexChecksumError)):
        SegmentIndex.load(truncated)

    # A store file is not an index file and vice versa.
    with pytest.raises(IndexFormatError):
        load_store(good)


def test_store_file_rejected_as_index(tmp_path):
    store = TrajectoryStore()
    store.add(make_trajectory(1, [(0, 0), (1, 1)], [(0, 1)]))
    path = tmp_path / "store.svti"
    save_store(store, path)
    with pytest.raises(IndexFormatError):
        SegmentIndex.load(path)
