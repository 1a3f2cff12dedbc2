"""Segment R-tree over trajectory MBRs, with range queries and persistence.

Trajectories are partitioned into MBR-optimal segments; the tree indexes one
entry per segment and keeps a back-reference to the owning trajectory so a
range hit can be refined to the exact closest point (the pivotal point).

Index files are little-endian: magic "SVTI", format version u16, then the
payload (projection reference, segmentation/tree parameters, trajectory
table with packed f64 coordinates and segment bounds) and a trailing CRC32
of the payload. Tree topology is derived data and is rebuilt on load.
"""

from __future__ import annotations

import heapq
import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .geometry import Mbr, PlanarPoint, ProjectionRef, mindist_point_mbr
from .model import SegmentRef, Trajectory, TrajectoryStore
from .segmentation import SegmentationConfig, partition
from .distance import find_pivotal

__all__ = [
    "QueryConfig",
    "SegmentIndex",
    "IndexError_",
    "IndexFormatError",
    "IndexVersionError",
    "IndexChecksumError",
    "build_index",
    "segment_store",
    "save_store",
    "load_store",
]

_MAGIC = b"SVTI"
_VERSION = 1
_INF = float("inf")


class IndexError_(Exception):
    """Base class for index persistence errors."""


class IndexFormatError(IndexError_):
    pass


class IndexVersionError(IndexError_):
    pass


class IndexChecksumError(IndexError_):
    pass


@dataclass(frozen=True)
class QueryConfig:
    """k plus either an absolute radius r (meters) or a candidate-rate rho
    targeting roughly rho*k candidate trajectories."""

    k: int
    r: float | None = None
    rate: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if (self.r is None) == (self.rate is None):
            raise ValueError("exactly one of r and rate must be set")
        if self.r is not None and self.r < 0:
            raise ValueError("r must be >= 0")
        if self.rate is not None and self.rate < 1:
            raise ValueError("candidate rate must be >= 1")


class _Node:
    __slots__ = ("leaf", "children", "entries", "mbr")

    def __init__(self, leaf: bool):
        self.leaf = leaf
        self.children: list[_Node] = []
        self.entries: list[SegmentRef] = []
        self.mbr: Mbr | None = None

    def items(self):
        return self.entries if self.leaf else self.children

    def recompute_mbr(self):
        items = self.items()
        if not items:
            self.mbr = None
            return
        m = items[0].mbr
        for it in items[1:]:
            m = m.union(it.mbr)
        self.mbr = m


def _center(m: Mbr):
    return ((m.min_x + m.max_x) / 2.0, (m.min_y + m.max_y) / 2.0)


class SegmentIndex:
    """R-tree over segment MBRs. Read-only after build/load; insert_segment
    requires exclusive access."""

    def __init__(self, store: TrajectoryStore, node_capacity: int = 16,
                 seg_cfg: SegmentationConfig | None = None):
        if node_capacity < 2:
            raise ValueError("node capacity must be >= 2")
        self.store = store
        self.node_capacity = node_capacity
        self.seg_cfg = seg_cfg
        self.root = _Node(leaf=True)
        self._keys: set[tuple[int, int]] = set()

    # -- construction ------------------------------------------------------

    def bulk_load(self, refs: list[SegmentRef]) -> None:
        """Sort-tile-recursive packing: deterministic and low-overlap."""
        self._keys = {(s.traj_id, s.seg_index) for s in refs}
        if len(self._keys) != len(refs):
            raise ValueError("duplicate segment reference")
        if not refs:
            self.root = _Node(leaf=True)
            return
        cap = self.node_capacity
        refs = sorted(refs, key=lambda s: (_center(s.mbr), s.traj_id, s.seg_index))
        leaves = []
        for group in _str_tiles(refs, cap, key=lambda s: _center(s.mbr)):
            node = _Node(leaf=True)
            node.entries = group
            node.recompute_mbr()
            leaves.append(node)
        level = leaves
        while len(level) > 1:
            parents = []
            for group in _str_tiles(level, cap, key=lambda n: _center(n.mbr)):
                node = _Node(leaf=False)
                node.children = group
                node.recompute_mbr()
                parents.append(node)
            level = parents
        self.root = level[0]

    def insert_segment(self, seg: SegmentRef) -> None:
        key = (seg.traj_id, seg.seg_index)
        if key in self._keys:
            raise ValueError(f"duplicate segment {key}")
        if seg.traj_id not in self.store:
            raise KeyError(f"trajectory {seg.traj_id} not in store")
        self._keys.add(key)
        split = self._insert(self.root, seg)
        if split is not None:
            new_root = _Node(leaf=False)
            new_root.children = [self.root, split]
            new_root.recompute_mbr()
            self.root = new_root

    def _insert(self, node: _Node, seg: SegmentRef):
        if node.leaf:
            node.entries.append(seg)
        else:
            best = min(
                node.children,
                key=lambda ch: (ch.mbr.union(seg.mbr).area - ch.mbr.area, ch.mbr.area),
            )
            split = self._insert(best, seg)
            if split is not None:
                node.children.append(split)
        node.recompute_mbr()
        if len(node.items()) > self.node_capacity:
            return self._split(node)
        return None

    def _split(self, node: _Node):
        """Quadratic split of an overflowing node; returns the new sibling."""
        items = node.items()
        worst = None
        seeds = (0, 1)
        for a in range(len(items)):
            for b in range(a + 1, len(items)):
                waste = items[a].mbr.union(items[b].mbr).area - items[a].mbr.area - items[b].mbr.area
                if worst is None or waste > worst:
                    worst = waste
                    seeds = (a, b)
        ga, gb = [items[seeds[0]]], [items[seeds[1]]]
        ma, mb = ga[0].mbr, gb[0].mbr
        rest = [it for i, it in enumerate(items) if i not in seeds]
        for it in rest:
            da = ma.union(it.mbr).area - ma.area
            db = mb.union(it.mbr).area - mb.area
            if da < db or (da == db and len(ga) <= len(gb)):
                ga.append(it); ma = ma.union(it.mbr)
            else:
                gb.append(it); mb = mb.union(it.mbr)
        sibling = _Node(node.leaf)
        if node.leaf:
            node.entries = ga
            sibling.entries = gb
        else:
            node.children = ga
            sibling.children = gb
        node.recompute_mbr()
        sibling.recompute_mbr()
        return sibling

    # -- queries -----------------------------------------------------------

    def __len__(self):
        return len(self._keys)

    def candidate_segments(self, p: PlanarPoint, r: float) -> list[SegmentRef]:
        """All segments whose MBR mindist to p is <= r (filter phase)."""
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.mbr is None or mindist_point_mbr(p, node.mbr) > r:
                continue
            if node.leaf:
                out.extend(s for s in node.entries if mindist_point_mbr(p, s.mbr) <= r)
            else:
                stack.extend(node.children)
        return out

    def range_query(self, p: PlanarPoint, cfg: QueryConfig):
        """Trajectories whose closest point lies within range of p.

        Returns a list of (traj_id, pivot_index, pivot_segment, pivot_dist)
        sorted by (pivot_dist, traj_id). In rate mode the radius is grown
        from a best-first estimate until ~rate*k trajectories qualify or the
        whole store has been scanned.
        """
        if cfg.r is not None:
            return self._range_fixed(p, cfg.r)
        want = int(math.ceil(cfg.rate * cfg.k))
        r = self._kth_segment_mindist(p, want)
        n_total = len(self.store)
        while True:
            res = self._range_fixed(p, r)
            if len(res) >= min(want, n_total):
                return res
            r = max(r * 2.0, 1.0)

    def _range_fixed(self, p: PlanarPoint, r: float):
        cand_ids = {s.traj_id for s in self.candidate_segments(p, r)}
        out = []
        for tid in cand_ids:
            t = self.store.get(tid)
            x, z, d = find_pivotal(p, t)
            if d <= r:
                out.append((tid, x, z, d))
        out.sort(key=lambda e: (e[3], e[0]))
        return out

    def _kth_segment_mindist(self, p: PlanarPoint, k: int) -> float:
        """Best-first mindist of the k-th nearest segment MBR (radius seed)."""
        if self.root.mbr is None:
            return 0.0
        heap = [(0.0, 0, id(self.root), self.root)]
        tie = 1
        found = 0
        last = 0.0
        while heap:
            d, is_seg, _, item = heapq.heappop(heap)
            if is_seg:
                found += 1
                last = d
                if found >= k:
                    return d
                continue
            if item.leaf:
                for s in item.entries:
                    heapq.heappush(heap, (mindist_point_mbr(p, s.mbr), 1, tie, s))
                    tie += 1
            else:
                for ch in item.children:
                    heapq.heappush(heap, (mindist_point_mbr(p, ch.mbr), 0, tie, ch))
                    tie += 1
        return last

    # -- invariant checks (used by tests) -----------------------------------

    def check_invariants(self):
        def walk(node):
            items = node.items()
            if node is not self.root or items:
                assert node.mbr is not None
            count = 0
            if node.leaf:
                assert len(node.entries) <= self.node_capacity
                for s in node.entries:
                    assert _contains(node.mbr, s.mbr)
                count = len(node.entries)
            else:
                assert len(node.children) <= self.node_capacity
                for ch in node.children:
                    assert _contains(node.mbr, ch.mbr)
                    count += walk(ch)
            return count

        total = walk(self.root) if self.root.mbr is not None else 0
        assert total == len(self._keys)

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> None:
        blob = _pack_payload(self.store, self.seg_cfg, self.node_capacity)
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<H", _VERSION))
            f.write(blob)
            f.write(struct.pack("<I", zlib.crc32(blob)))

    @classmethod
    def load(cls, path) -> "SegmentIndex":
        with open(path, "rb") as f:
            data = f.read()
        store, seg_cfg, cap = _unpack(data, want_kind=1)
        idx = cls(store, cap, seg_cfg)
        idx.bulk_load(store.segment_refs())
        return idx


def _contains(outer: Mbr, inner: Mbr) -> bool:
    return (
        outer.min_x <= inner.min_x
        and outer.min_y <= inner.min_y
        and outer.max_x >= inner.max_x
        and outer.max_y >= inner.max_y
    )


def _str_tiles(items, cap, key):
    """Sort-tile-recursive grouping of items into runs of <= cap."""
    n = len(items)
    n_nodes = math.ceil(n / cap)
    n_strips = math.ceil(math.sqrt(n_nodes))
    per_strip = n_strips * cap
    items = sorted(items, key=lambda it: key(it)[0])
    groups = []
    for i in range(0, n, per_strip):
        strip = sorted(items[i : i + per_strip], key=lambda it: key(it)[1])
        for j in range(0, len(strip), cap):
            groups.append(strip[j : j + cap])
    return groups


def segment_store(store: TrajectoryStore, cfg: SegmentationConfig) -> TrajectoryStore:
    """Re-partition every trajectory with the MBR-area DP."""
    out = TrajectoryStore(store.projection)
    for t in store.trajectories():
        bounds = partition((t.xs, t.ys), cfg)
        out.add(
            Trajectory(
                t.traj_id,
                t.xs,
                t.ys,
                np.asarray([b[0] for b in bounds], dtype=np.int32),
                np.asarray([b[1] for b in bounds], dtype=np.int32),
            )
        )
    return out


def build_index(
    store: TrajectoryStore,
    cfg: SegmentationConfig | None = None,
    node_capacity: int = 16,
    resegment: bool = True,
) -> SegmentIndex:
    """Partition (optionally) and bulk-load the segment tree."""
    if resegment:
        store = segment_store(store, cfg or SegmentationConfig())
    idx = SegmentIndex(store, node_capacity, cfg)
    idx.bulk_load(store.segment_refs())
    return idx


# -- wire format -------------------------------------------------------------


def _pack_payload(store: TrajectoryStore, seg_cfg, node_capacity, kind: int = 1) -> bytes:
    parts = [struct.pack("<B", kind)]
    proj = store.projection
    if proj is None:
        parts.append(struct.pack("<B", 0))
    else:
        parts.append(struct.pack("<B3d", 1, proj.ref_lon, proj.ref_lat, proj.earth_radius))
    if kind == 1:
        cfg = seg_cfg or SegmentationConfig()
        parts.append(struct.pack("<III", node_capacity, cfg.l_min, cfg.l_max))
    trajs = store.trajectories()
    parts.append(struct.pack("<Q", len(trajs)))
    for t in trajs:
        parts.append(struct.pack("<qI", t.traj_id, t.n))
        parts.append(np.ascontiguousarray(t.xs, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(t.ys, dtype="<f8").tobytes())
        parts.append(struct.pack("<I", t.n_segments))
        bounds = np.empty(2 * t.n_segments, dtype="<u4")
        bounds[0::2] = t.seg_starts
        bounds[1::2] = t.seg_ends
        parts.append(bounds.tobytes())
    return b"".join(parts)


def _unpack(data: bytes, want_kind: int):
    if len(data) < 10:
        raise IndexFormatError("file too short to be an index")
    if data[:4] != _MAGIC:
        raise IndexVersionError("bad magic bytes: not an index file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != _VERSION:
        raise IndexVersionError(f"unsupported format version {version}")
    payload = data[6:-4]
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(payload) != crc:
        raise IndexChecksumError("payload checksum mismatch")
    try:
        return _read_payload(payload, want_kind)
    except (struct.error, IndexError, ValueError) as e:
        raise IndexFormatError(f"malformed payload: {e}") from e


def _read_payload(payload: bytes, want_kind: int):
    off = 0
    (kind,) = struct.unpack_from("<B", payload, off); off += 1
    if kind != want_kind:
        raise IndexFormatError(f"file holds kind {kind}, expected {want_kind}")
    (has_proj,) = struct.unpack_from("<B", payload, off); off += 1
    proj = None
    if has_proj:
        lon, lat, rad = struct.unpack_from("<3d", payload, off); off += 24
        proj = ProjectionRef(lon, lat, rad)
    seg_cfg = None
    cap = 16
    if kind == 1:
        cap, lmin, lmax = struct.unpack_from("<III", payload, off); off += 12
        seg_cfg = SegmentationConfig(lmin, lmax)
    (n_traj,) = struct.unpack_from("<Q", payload, off); off += 8
    store = TrajectoryStore(proj)
    for _ in range(n_traj):
        tid, n = struct.unpack_from("<qI", payload, off); off += 12
        xs = np.frombuffer(payload, dtype="<f8", count=n, offset=off).copy(); off += 8 * n
        ys = np.frombuffer(payload, dtype="<f8", count=n, offset=off).copy(); off += 8 * n
        (n_seg,) = struct.unpack_from("<I", payload, off); off += 4
        bounds = np.frombuffer(payload, dtype="<u4", count=2 * n_seg, offset=off); off += 8 * n_seg
        store.add(
            Trajectory(
                tid,
                xs,
                ys,
                bounds[0::2].astype(np.int32),
                bounds[1::2].astype(np.int32),
            )
        )
    if off != len(payload):
        raise IndexFormatError("trailing bytes after trajectory table")
    return store, seg_cfg, cap


def save_store(store: TrajectoryStore, path) -> None:
    """Persist a raw trajectory store (pre-segmentation)."""
    blob = _pack_payload(store, None, 0, kind=0)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<H", _VERSION))
        f.write(blob)
        f.write(struct.pack("<I", zlib.crc32(blob)))


def load_store(path) -> TrajectoryStore:
    with open(path, "rb") as f:
        data = f.read()
    store, _, _ = _unpack(data, want_kind=0)
    return store
