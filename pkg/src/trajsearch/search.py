"""Continuous top-k similar-trajectory search over a segment index.

A QuerySession owns the moving object's growing history and a per-trajectory
memo buffer that lets later timestamps reuse the previous history distance
(fast paths) instead of rescanning. The reference implementation at the
bottom recomputes everything from first principles and is the test oracle.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .distance import (
    DistanceBreakdown,
    DistanceParams,
    IncrementalEntry,
    SearchStats,
    coarse_indices,
    compute_distance,
)
from .geometry import PlanarPoint, point_segment_distance
from .index import QueryConfig, SegmentIndex
from .model import MovingObjectState, TrajectoryStore

__all__ = ["TopKHeap", "QuerySession", "ReferenceSession", "reference_topk"]

_INF = float("inf")
_EVICT_AFTER = 8  # steps a buffer entry may go untouched before eviction


class TopKHeap:
    """Bounded container of the k smallest (value, id) pairs.

    threshold() is the current k-th smallest value, +inf while underfull;
    ties resolve to the smaller id.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self._heap: list[tuple[float, int]] = []  # max-heap via negation

    def threshold(self) -> float:
        if len(self._heap) < self.k:
            return _INF
        return -self._heap[0][0]

    def offer(self, value: float, ident: int) -> bool:
        item = (-value, -ident)
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, item)
            return True
        if item > self._heap[0]:
            heapq.heapreplace(self._heap, item)
            return True
        return False

    def ascending(self) -> list[tuple[float, int]]:
        return sorted((-v, -i) for v, i in self._heap)


class QuerySession:
    """One continuous query: feed observations with step(), get top-k back."""

    def __init__(
        self,
        index: SegmentIndex,
        destination: PlanarPoint,
        params: DistanceParams,
        query: QueryConfig,
        use_s1: bool = True,
        use_s2: bool = True,
        use_s3: bool = True,
    ):
        self.index = index
        self.params = params
        self.query = query
        self.object = MovingObjectState(destination)
        self.buffer: dict[int, IncrementalEntry] = {}
        self.stats = SearchStats()
        self.use_s1 = use_s1
        self.use_s2 = use_s2
        self.use_s3 = use_s3
        self._hx: list[float] = []
        self._hy: list[float] = []

    @property
    def step_count(self) -> int:
        return len(self._hx)

    def step(self, p: PlanarPoint) -> list[tuple[int, DistanceBreakdown]]:
        self.object = self.object.append_observation(p)
        self._hx.append(p.x)
        self._hy.append(p.y)
        hist_x = np.asarray(self._hx, dtype=np.float64)
        hist_y = np.asarray(self._hy, dtype=np.float64)
        c = len(hist_x)

        candidates = self.index.range_query(p, self.query)
        heap = TopKHeap(self.query.k)
        results: dict[int, DistanceBreakdown] = {}
        for tid, x, z, pivot_d in candidates:
            t = self.index.store.get(tid)
            dist_k = heap.threshold() if self.use_s2 else _INF
            entry = self.buffer.get(tid) if self.use_s3 else None
            breakdown, new_entry = compute_distance(
                hist_x,
                hist_y,
                self.object.destination,
                t,
                self.params,
                dist_k=dist_k,
                entry=entry,
                use_s1=self.use_s1,
                use_s2=self.use_s2,
                use_s3=self.use_s3,
                stats=self.stats,
                pivot=(x, z, pivot_d),
            )
            new_entry.last_touch = c
            self.buffer[tid] = new_entry
            if breakdown is not None:
                results[tid] = breakdown
                heap.offer(breakdown.combined, tid)

        stale_ids = [tid for tid, e in self.buffer.items() if c - e.last_touch > _EVICT_AFTER]
        for tid in stale_ids:
            del self.buffer[tid]

        return [(tid, results[tid]) for _, tid in heap.ascending()]


def reference_topk(
    store: TrajectoryStore,
    hist_x: np.ndarray,
    hist_y: np.ndarray,
    dest: PlanarPoint,
    params: DistanceParams,
    r: float,
    k: int,
) -> list[tuple[int, DistanceBreakdown]]:
    """Strategy-free linear-scan oracle for one timestamp.

    Scans every trajectory, finds the pivotal point by full scan, and
    evaluates the decayed-max history distance directly from its definition
    (fresh coarse grid at the current pivot when g > 1).
    """
    c = len(hist_x)
    px, py = float(hist_x[-1]), float(hist_y[-1])
    weights = params.theta ** np.arange(c - 1, -1, -1, dtype=np.float64)
    scored = []
    for t in store.trajectories():
        dx = t.xs - px
        dy = t.ys - py
        d2 = dx * dx + dy * dy
        x = int(np.argmin(d2))
        pivot_d = math.sqrt(float(d2[x]))
        if pivot_d > r:
            continue
        z = t.segment_of(x)
        ttd = point_segment_distance(dest, t.point(x), t.point(t.n - 1))
        idx = coarse_indices(x, params.g)
        vx = t.xs[idx]
        vy = t.ys[idx]
        ddx = hist_x[:, None] - vx[None, :]
        ddy = hist_y[:, None] - vy[None, :]
        mins = np.sqrt((ddx * ddx + ddy * ddy).min(axis=1))
        terms = weights * mins
        witness = int(np.argmax(terms[::-1]))  # ties to the latest history point
        witness = c - 1 - witness
        htd = float(terms[witness])
        combined = params.alpha * htd + (1.0 - params.alpha) * ttd
        scored.append((combined, t.traj_id, DistanceBreakdown(htd, ttd, combined, witness, x, z)))
    scored.sort(key=lambda e: (e[0], e[1]))
    return [(tid, bd) for _, tid, bd in scored[:k]]


class ReferenceSession:
    """step()-compatible wrapper around reference_topk (absolute radius only)."""

    def __init__(self, store: TrajectoryStore, destination: PlanarPoint,
                 params: DistanceParams, query: QueryConfig):
        if query.r is None:
            raise ValueError("reference session requires an absolute radius")
        self.store = store
        self.destination = destination
        self.params = params
        self.query = query
        self._hx: list[float] = []
        self._hy: list[float] = []

    def step(self, p: PlanarPoint) -> list[tuple[int, DistanceBreakdown]]:
        self._hx.append(p.x)
        self._hy.append(p.y)
        return reference_topk(
            self.store,
            np.asarray(self._hx, dtype=np.float64),
            np.asarray(self._hy, dtype=np.float64),
            self.destination,
            self.params,
            self.query.r,
            self.query.k,
        )
