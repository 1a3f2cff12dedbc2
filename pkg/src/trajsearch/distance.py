"""The object-to-trajectory distance measure and its pruning machinery.

The combined distance is alpha * history_distance + (1 - alpha) *
target_distance. The history side is the decayed worst case of per-point
nearest distances between the object's history and the trajectory prefix
ending at the pivotal point:

    max_{j=1..c} theta**(c-j) * min_{p in prefix} d(p_o^j, p)

The target side is the distance from the object's destination to the line
segment from the pivotal point to the trajectory's last point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .geometry import PlanarPoint, euclid, point_segment_distance
from .model import Trajectory

__all__ = [
    "DistanceParams",
    "DistanceBreakdown",
    "ErrorBounds",
    "IncrementalEntry",
    "SearchStats",
    "find_pivotal",
    "target_distance",
    "history_distance",
    "history_distance_recursive",
    "coarse_indices",
    "granularity_error_bounds",
    "compute_distance",
]

_INF = float("inf")


@dataclass(frozen=True)
class DistanceParams:
    """alpha: history/target trade-off; theta: per-step decay; g: granularity."""

    alpha: float = 0.5
    theta: float = 0.5
    g: int = 1

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.theta <= 1.0):
            raise ValueError("alpha and theta must lie in [0, 1]")
        if self.g < 1:
            raise ValueError("granularity must be >= 1")


@dataclass(frozen=True)
class DistanceBreakdown:
    history: float
    target: float
    combined: float
    witness: int  # history index attaining the decayed max
    pivot_index: int
    pivot_segment: int


@dataclass(frozen=True)
class ErrorBounds:
    lower: float
    upper: float


@dataclass
class IncrementalEntry:
    """Per-trajectory memo carried across timestamps for the fast path.

    The witness identity htd_prev == theta**(step_prev - witness_prev) *
    witness_min_prev holds whenever the entry is not stale; witness_min_prev
    is the undecayed minimum, which is what the fast-path guard compares
    against.
    """

    traj_id: int
    x_prev: int
    z_prev: int
    htd_prev: float
    witness_prev: int
    witness_min_prev: float
    step_prev: int  # history length c when the entry was written
    view_idx: np.ndarray | None = None  # coarse view indices (g > 1 only)
    stale: bool = False
    last_touch: int = 0


@dataclass
class SearchStats:
    """Pruning / reuse counters, accumulated across compute_distance calls."""

    s1_skips: int = 0
    s2_prunes: int = 0
    s3_case1: int = 0
    s3_case2_fast: int = 0
    s3_full: int = 0
    full_scans: int = 0

    def merge(self, other: "SearchStats") -> None:
        self.s1_skips += other.s1_skips
        self.s2_prunes += other.s2_prunes
        self.s3_case1 += other.s3_case1
        self.s3_case2_fast += other.s3_case2_fast
        self.s3_full += other.s3_full
        self.full_scans += other.full_scans


@dataclass(frozen=True)
class _View:
    """Kernel-ready arrays for a (possibly coarse) trajectory prefix.

    seg_ptr delimits runs of view points that belong to one indexed segment;
    seg_mbr carries the corresponding segment MBRs for pruning. idx is None
    for the dense g=1 view (points 0..x).
    """

    idx: np.ndarray | None
    view_x: np.ndarray
    view_y: np.ndarray
    seg_ptr: np.ndarray
    seg_mbr: np.ndarray


def find_pivotal(p_c: PlanarPoint, t: Trajectory):
    """(pivot index, pivot segment, pivot distance); ties to the smallest index.

    Segments whose MBR mindist already reaches the best distance cannot
    contain a strictly closer point, so they are skipped.
    """
    idx, seg, dist, _ = _core.nearest_point_scan(
        p_c.x, p_c.y, t.xs, t.ys, t.seg_ptr, t.seg_mbrs
    )
    return idx, seg, dist


def target_distance(dest: PlanarPoint, t: Trajectory, x: int) -> float:
    """Distance from the destination to the pivotal-to-end line segment."""
    return point_segment_distance(dest, t.point(x), t.point(t.n - 1))


def coarse_indices(x: int, g: int, prev_idx: np.ndarray | None = None, x_prev: int | None = None) -> np.ndarray:
    """Coarse view indices ending at pivot x (0-based).

    Fresh views are the arithmetic grid x, x-g, ... down into [0, g).
    Incremental updates keep the previous grid and splice the new pivot in,
    leaving at most one seam gap of |x - x_prev| mod g.
    """
    if g == 1:
        return np.arange(x + 1, dtype=np.int64)
    if prev_idx is None or x_prev is None:
        start = x % g
        return np.arange(start, x + 1, g, dtype=np.int64)
    gamma = abs(x - x_prev) % g
    if x >= x_prev:
        last = x - gamma
        ext = np.arange(x_prev + g, last + 1, g, dtype=np.int64)
        parts = [prev_idx, ext]
        if gamma > 0 or last < x:
            parts.append(np.array([x], dtype=np.int64))
        return np.concatenate(parts)
    # pivot regressed: truncate and re-anchor at x
    if gamma == 0:
        kept = prev_idx[prev_idx <= x]
        if len(kept) and kept[-1] == x:
            return kept
        # seam gaps can knock x off the previous grid; keep the pivot anyway
        return np.concatenate([kept, np.array([x], dtype=np.int64)])
    kept = prev_idx[prev_idx <= x + gamma - g]
    return np.concatenate([kept, np.array([x], dtype=np.int64)])


def _dense_view(t: Trajectory, x: int, z: int) -> _View:
    ptr = np.empty(z + 2, dtype=np.int64)
    ptr[: z + 1] = t.seg_starts[: z + 1]
    ptr[z + 1] = x + 1
    return _View(None, t.xs[: x + 1], t.ys[: x + 1], ptr, np.ascontiguousarray(t.seg_mbrs[: z + 1]))


def _coarse_view(t: Trajectory, idx: np.ndarray) -> _View:
    seg_of = np.searchsorted(t.seg_starts, idx, side="right") - 1
    # run boundaries where the owning segment changes
    cut = np.flatnonzero(np.diff(seg_of)) + 1
    ptr = np.concatenate(([0], cut, [len(idx)])).astype(np.int64)
    run_segs = seg_of[ptr[:-1]]
    return _View(
        idx,
        np.ascontiguousarray(t.xs[idx]),
        np.ascontiguousarray(t.ys[idx]),
        ptr,
        np.ascontiguousarray(t.seg_mbrs[run_segs]),
    )


def _make_view(t: Trajectory, x: int, z: int, g: int, idx: np.ndarray | None = None) -> _View:
    if g == 1:
        return _dense_view(t, x, z)
    if idx is None:
        idx = coarse_indices(x, g)
    return _coarse_view(t, idx)


def _suffix_view(t: Trajectory, view: _View, x_prev: int) -> _View | None:
    """Sub-view of points with original index > x_prev (the incremental part)."""
    if view.idx is None:
        lo = x_prev + 1
        hi = len(view.view_x) - 1
        if lo > hi:
            return None
        z_lo = t.segment_of(lo)
        z_hi = t.segment_of(hi)
        ptr = np.empty(z_hi - z_lo + 2, dtype=np.int64)
        ptr[0] = lo
        ptr[1 : z_hi - z_lo + 1] = t.seg_starts[z_lo + 1 : z_hi + 1]
        ptr[-1] = hi + 1
        ptr -= lo
        return _View(
            None,
            t.xs[lo : hi + 1],
            t.ys[lo : hi + 1],
            ptr,
            np.ascontiguousarray(t.seg_mbrs[z_lo : z_hi + 1]),
        )
    pos = int(np.searchsorted(view.idx, x_prev, side="right"))
    if pos >= len(view.idx):
        return None
    return _coarse_view(t, view.idx[pos:])


def history_distance(
    hist_x: np.ndarray,
    hist_y: np.ndarray,
    t: Trajectory,
    x: int,
    z: int,
    params: DistanceParams,
    use_s1: bool = True,
    use_s2: bool = False,
    ttd: float = 0.0,
    dist_k: float = _INF,
    view: _View | None = None,
    stats: SearchStats | None = None,
):
    """Exact decayed-max history distance over the prefix ending at x.

    Returns (value, witness, witness_min) or (None, -1, 0.0) when the scan
    was abandoned by the k-bound prune (use_s2 with a finite dist_k).
    """
    if view is None:
        view = _make_view(t, x, z, params.g)
    val, wit, wmin, pruned, skips, s2 = _core.history_scan(
        hist_x,
        hist_y,
        0,
        params.theta,
        view.view_x,
        view.view_y,
        view.seg_ptr,
        view.seg_mbr,
        params.alpha,
        ttd,
        dist_k,
        -1.0,
        -1,
        0.0,
        use_s1,
        use_s2,
    )
    if stats is not None:
        stats.s1_skips += skips
        stats.full_scans += 1
        if pruned:
            stats.s2_prunes += 1
    if pruned:
        return None, -1, 0.0
    return val, int(wit), wmin


def history_distance_recursive(hist_pts, prefix_pts, theta: float) -> float:
    """Reference-only recursive variant of the history distance.

    Matches each history point to a distinct prefix point in order, so it
    returns +inf whenever the prefix is shorter than the history. The
    operational max/min scan (history_distance) is the normative measure and
    lower-bounds this value wherever it is finite; this form exists for the
    test suite's inequality checks.
    """
    a, b = len(hist_pts), len(prefix_pts)
    if a == 0 or b == 0:
        return _INF
    hx = np.asarray([p.x for p in hist_pts])
    hy = np.asarray([p.y for p in hist_pts])
    vx = np.asarray([p.x for p in prefix_pts])
    vy = np.asarray([p.y for p in prefix_pts])
    f = np.full((a + 1, b + 1), _INF)
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            d = math.hypot(hx[i - 1] - vx[j - 1], hy[i - 1] - vy[j - 1])
            if i == 1 and j == 1:
                f[i, j] = d
            else:
                f[i, j] = max(d, min(theta * f[i - 1, j - 1], f[i, j - 1]))
    return float(f[a, b])


def granularity_error_bounds(
    hist_x: np.ndarray,
    hist_y: np.ndarray,
    t: Trajectory,
    x: int,
    params: DistanceParams,
    htd_exact: float,
    view: _View,
) -> ErrorBounds:
    """Error interval of the coarse history distance around the exact one.

    lower = exact - pivot distance; upper = decayed max over all
    (history point, coarse point) pairs minus exact. Both are >= 0 when
    htd_exact was computed at g = 1.
    """
    c = len(hist_x)
    pivot_d = math.hypot(hist_x[-1] - t.xs[x], hist_y[-1] - t.ys[x])
    lower = htd_exact - pivot_d
    weights = params.theta ** np.arange(c - 1, -1, -1, dtype=np.float64)
    dx = hist_x[:, None] - view.view_x[None, :]
    dy = hist_y[:, None] - view.view_y[None, :]
    pair_max = float(np.max(weights * np.sqrt(dx * dx + dy * dy).max(axis=1)))
    return ErrorBounds(lower, pair_max - htd_exact)


def compute_distance(
    hist_x: np.ndarray,
    hist_y: np.ndarray,
    dest: PlanarPoint,
    t: Trajectory,
    params: DistanceParams,
    dist_k: float = _INF,
    entry: IncrementalEntry | None = None,
    use_s1: bool = True,
    use_s2: bool = True,
    use_s3: bool = True,
    stats: SearchStats | None = None,
    pivot: tuple[int, int, float] | None = None,
):
    """Full per-trajectory distance with all pruning strategies.

    Returns (DistanceBreakdown or None, refreshed IncrementalEntry); None
    means the trajectory was pruned against dist_k, in which case the entry
    is stale and the next timestamp recomputes from scratch.
    """
    if stats is None:
        stats = SearchStats()
    c = len(hist_x)
    p_c = PlanarPoint(float(hist_x[-1]), float(hist_y[-1]))
    if pivot is None:
        x, z, pivot_d = find_pivotal(p_c, t)
    else:
        x, z, pivot_d = pivot
    ttd = target_distance(dest, t, x)

    def stale_entry(view_idx=None):
        return IncrementalEntry(t.traj_id, x, z, 0.0, -1, 0.0, c, view_idx, stale=True)

    # pivot-distance lower bound on the combined value
    if use_s2 and params.alpha * pivot_d + (1.0 - params.alpha) * ttd >= dist_k:
        stats.s2_prunes += 1
        return None, stale_entry()

    valid = (
        use_s3
        and entry is not None
        and not entry.stale
        and entry.step_prev < c
        and entry.witness_prev >= 0
    )

    view_idx = None
    if params.g > 1:
        if valid and entry.view_idx is not None:
            view_idx = coarse_indices(x, params.g, entry.view_idx, entry.x_prev)
        else:
            view_idx = coarse_indices(x, params.g)
    view = _make_view(t, x, z, params.g, view_idx)

    htd = wit = wmin = None
    if valid and x >= entry.x_prev:
        fast = x == entry.x_prev
        if not fast:
            # pivot advanced: the witness minimum survives iff the new
            # prefix points cannot undercut it
            inc = _suffix_view(t, view, entry.x_prev)
            if inc is None:
                fast = True
            else:
                m_incr, skips = _core.min_dist_scan(
                    hist_x[entry.witness_prev],
                    hist_y[entry.witness_prev],
                    inc.view_x,
                    inc.view_y,
                    inc.seg_ptr,
                    inc.seg_mbr,
                    _INF,
                    use_s1,
                )
                stats.s1_skips += skips
                fast = m_incr >= entry.witness_min_prev
        if fast:
            delta = c - entry.step_prev
            carried = math.pow(params.theta, delta) * entry.htd_prev
            val, w, wm, pruned, skips, s2 = _core.history_scan(
                hist_x,
                hist_y,
                entry.step_prev,
                params.theta,
                view.view_x,
                view.view_y,
                view.seg_ptr,
                view.seg_mbr,
                params.alpha,
                ttd,
                dist_k if use_s2 else _INF,
                carried,
                entry.witness_prev,
                entry.witness_min_prev,
                use_s1,
                use_s2,
            )
            stats.s1_skips += skips
            if x == entry.x_prev:
                stats.s3_case1 += 1
            else:
                stats.s3_case2_fast += 1
            if pruned:
                stats.s2_prunes += 1
                return None, stale_entry(view_idx)
            htd, wit, wmin = val, int(w), wm
        else:
            stats.s3_full += 1
    elif valid:
        stats.s3_full += 1  # pivot regressed: full recompute

    if htd is None:
        htd, wit, wmin = history_distance(
            hist_x,
            hist_y,
            t,
            x,
            z,
            params,
            use_s1=use_s1,
            use_s2=use_s2,
            ttd=ttd,
            dist_k=dist_k,
            view=view,
            stats=stats,
        )
        if htd is None:
            return None, stale_entry(view_idx)

    combined = params.alpha * htd + (1.0 - params.alpha) * ttd
    new_entry = IncrementalEntry(t.traj_id, x, z, htd, wit, wmin, c, view_idx)
    return DistanceBreakdown(htd, ttd, combined, wit, x, z), new_entry
