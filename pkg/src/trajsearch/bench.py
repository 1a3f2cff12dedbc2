"""Metrics and experiment harness: hit rate, synthetic worlds, sweeps.

The hit rate of a result set is the fraction of the k trajectories owning
the k nearest historical points to the object's next observed position that
the search actually returned.
"""

from __future__ import annotations

import csv
import itertools
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .distance import DistanceParams
from .geometry import PlanarPoint
from .index import QueryConfig, SegmentIndex, build_index
from .model import Trajectory, TrajectoryStore
from .search import QuerySession, reference_topk
from .segmentation import SegmentationConfig

__all__ = [
    "HitInput",
    "QueryStream",
    "SweepConfig",
    "hit_rate",
    "brute_force_topk",
    "synth_world",
    "run_sweep",
    "write_report",
]


@dataclass(frozen=True)
class HitInput:
    future_point: PlanarPoint
    k: int
    result_ids: frozenset

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


def hit_rate(store: TrajectoryStore, inp: HitInput) -> float:
    """|{owners of the k nearest points} ∩ results| / k.

    The k nearest historical points are selected with deterministic
    tie-breaking by (distance, trajectory id, point index); the denominator
    stays k even when fewer points exist.
    """
    fp = inp.future_point
    best: list[tuple[float, int, int]] = []
    for t in store.trajectories():
        dx = t.xs - fp.x
        dy = t.ys - fp.y
        d2 = dx * dx + dy * dy
        take = min(inp.k, len(d2))
        part = np.argpartition(d2, take - 1)[:take] if take < len(d2) else np.arange(len(d2))
        best.extend((float(d2[i]), t.traj_id, int(i)) for i in part)
    best.sort()
    owners = {tid for _, tid, _ in best[: inp.k]}
    return len(owners & set(inp.result_ids)) / inp.k


def brute_force_topk(store, hist_x, hist_y, dest, params: DistanceParams, query: QueryConfig):
    """Linear-scan oracle shared with the search tests (absolute radius)."""
    if query.r is None:
        raise ValueError("brute-force oracle requires an absolute radius")
    return reference_topk(store, hist_x, hist_y, dest, params, query.r, query.k)


@dataclass(frozen=True)
class QueryStream:
    """One continuous query: warm-up history, destination, future stream."""

    initial: tuple
    destination: PlanarPoint
    stream: tuple


def synth_world(
    seed: int,
    n_traj: int,
    len_range: tuple[int, int] = (50, 120),
    n_queries: int = 0,
    l_q: int = 10,
    n_steps: int = 20,
    n_lanes: int = 4,
    extent: float = 10_000.0,
    step_len: float = 50.0,
):
    """Deterministic correlated-random-walk vessels with lane attractors.

    Vessels follow one of n_lanes straight corridors with heading noise and
    a pull back toward the lane line. The first n_traj vessels become the
    store; n_queries held-out vessels become QueryStreams (first l_q points
    as warm-up, last point as destination, the following n_steps + 1 points
    as the live stream).
    """
    rng = np.random.default_rng(seed)
    lanes = rng.uniform(0.0, extent, size=(max(n_lanes, 1), 4))
    store = TrajectoryStore()
    queries = []
    total = n_traj + n_queries
    for v in range(total):
        is_query = v >= n_traj
        lo, hi = len_range
        n = int(rng.integers(lo, hi + 1))
        if is_query:
            n = max(n, l_q + n_steps + 2)
        lane = lanes[int(rng.integers(len(lanes)))]
        a = np.array(lane[:2])
        b = np.array(lane[2:])
        direction = b - a
        norm = np.linalg.norm(direction)
        direction = direction / norm if norm > 0 else np.array([1.0, 0.0])
        pos = a + rng.normal(0.0, extent * 0.02, size=2)
        heading = direction.copy()
        pts = np.empty((n, 2))
        for i in range(n):
            pts[i] = pos
            # pull back toward the lane line, then blend with noisy heading
            along = a + direction * np.dot(pos - a, direction)
            pull = along - pos
            pn = np.linalg.norm(pull)
            if pn > 0:
                pull /= pn
            heading = 0.8 * heading + 0.15 * direction + 0.1 * pull + rng.normal(0.0, 0.15, size=2)
            hn = np.linalg.norm(heading)
            if hn > 0:
                heading /= hn
            pos = pos + heading * step_len * rng.uniform(0.7, 1.3)
        if is_query:
            ppts = [PlanarPoint(float(x), float(y)) for x, y in pts]
            queries.append(
                QueryStream(
                    initial=tuple(ppts[:l_q]),
                    destination=ppts[-1],
                    stream=tuple(ppts[l_q : l_q + n_steps + 1]),
                )
            )
        else:
            store.add(
                Trajectory(
                    v,
                    np.ascontiguousarray(pts[:, 0]),
                    np.ascontiguousarray(pts[:, 1]),
                    np.asarray([0], dtype=np.int32),
                    np.asarray([n - 1], dtype=np.int32),
                )
            )
    return store, queries


@dataclass
class SweepConfig:
    """One-at-a-time or cross-product parameter grids (defaults are single
    points, so only explicitly widened axes multiply)."""

    l_min: list = field(default_factory=lambda: [30])
    l_max: list = field(default_factory=lambda: [50])
    r: list = field(default_factory=lambda: [15.0])
    rate_mode: bool = False  # interpret r values as candidate-rate multipliers
    k: list = field(default_factory=lambda: [50])
    theta: list = field(default_factory=lambda: [0.5])
    alpha: list = field(default_factory=lambda: [0.5])
    g: list = field(default_factory=lambda: [1])
    repetitions: int = 1
    timestamps: int = 20
    use_s1: bool = True
    use_s2: bool = True
    use_s3: bool = True
    node_capacity: int = 16

    def grid(self):
        axes = ["l_min", "l_max", "r", "k", "theta", "alpha", "g"]
        for combo in itertools.product(*(getattr(self, a) for a in axes)):
            yield dict(zip(axes, combo))


REPORT_COLUMNS = [
    "l_min", "l_max", "r", "k", "theta", "alpha", "g", "query",
    "mean_step_ms", "mean_hit", "mean_candidates",
    "s1_skips", "s2_prunes", "s3_fast", "s3_full",
]


def run_sweep(index: SegmentIndex, queries, sweep: SweepConfig):
    """Run every query at every grid point; returns report rows (dicts).

    The index is re-segmented and rebuilt only when a grid point changes
    l_min/l_max. Timing covers step() calls only.
    """
    rows = []
    built: dict[tuple[int, int], SegmentIndex] = {}
    for point in sweep.grid():
        seg_key = (point["l_min"], point["l_max"])
        idx = built.get(seg_key)
        if idx is None:
            if index.seg_cfg is not None and (index.seg_cfg.l_min, index.seg_cfg.l_max) == seg_key:
                idx = index
            else:
                idx = build_index(index.store, SegmentationConfig(*seg_key), sweep.node_capacity)
            built[seg_key] = idx
        params = DistanceParams(point["alpha"], point["theta"], point["g"])
        qcfg = (
            QueryConfig(point["k"], rate=point["r"])
            if sweep.rate_mode
            else QueryConfig(point["k"], r=point["r"])
        )
        for qi, q in enumerate(queries):
            step_times = []
            hits = []
            cand_counts = []
            stats = None
            for _ in range(sweep.repetitions):
                session = QuerySession(
                    idx, q.destination, params, qcfg,
                    use_s1=sweep.use_s1, use_s2=sweep.use_s2, use_s3=sweep.use_s3,
                )
                for p in q.initial:
                    session.step(p)
                n_steps = min(sweep.timestamps, len(q.stream) - 1)
                for s in range(n_steps):
                    t0 = time.perf_counter()
                    result = session.step(q.stream[s])
                    step_times.append(time.perf_counter() - t0)
                    ids = frozenset(tid for tid, _ in result)
                    cand_counts.append(len(ids))
                    hits.append(hit_rate(idx.store, HitInput(q.stream[s + 1], point["k"], ids)))
                stats = session.stats
            rows.append({
                **point,
                "query": qi,
                "mean_step_ms": 1000.0 * float(np.mean(step_times)) if step_times else 0.0,
                "mean_hit": float(np.mean(hits)) if hits else 0.0,
                "mean_candidates": float(np.mean(cand_counts)) if cand_counts else 0.0,
                "s1_skips": stats.s1_skips,
                "s2_prunes": stats.s2_prunes,
                "s3_fast": stats.s3_case1 + stats.s3_case2_fast,
                "s3_full": stats.s3_full,
            })
    return rows


def write_report(rows, csv_path, json_path=None):
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in REPORT_COLUMNS})
    if json_path is not None:
        summary = {
            "rows": len(rows),
            "mean_step_ms": float(np.mean([r["mean_step_ms"] for r in rows])) if rows else 0.0,
            "mean_hit": float(np.mean([r["mean_hit"] for r in rows])) if rows else 0.0,
        }
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump({"summary": summary, "rows": rows}, f, indent=2)
