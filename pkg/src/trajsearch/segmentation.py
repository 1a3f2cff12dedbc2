"""Dynamic-programming trajectory partitioning that minimizes total MBR area.

Every segment length must fall in [l_min, l_max], except the first segment,
which may be any length in [1, l_max]. The relaxed first segment makes every
trajectory length partitionable (for n > l_max there is always a k with
n - k*l_min in [1, l_max]) without ever discarding prefix points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SegmentationConfig", "partition", "brute_force_partition"]

_INF = float("inf")


@dataclass(frozen=True)
class SegmentationConfig:
    l_min: int = 30
    l_max: int = 50

    def __post_init__(self):
        if self.l_min < 1 or self.l_min > self.l_max:
            raise ValueError("need 1 <= l_min <= l_max")


def partition(points, cfg: SegmentationConfig) -> list[tuple[int, int]]:
    """Optimal (start, end) segment bounds, 0-based inclusive.

    F[j] = best total MBR area of a valid partition of the first j points.
    Candidate last-segment lengths are scanned ascending with the window
    min/max maintained incrementally, so ties resolve to the shortest last
    segment and the cost is O(n * l_max).
    """
    xs, ys = _as_arrays(points)
    n = len(xs)
    if n == 0:
        raise ValueError("cannot partition an empty trajectory")

    F = np.full(n + 1, _INF)
    F[0] = 0.0
    choice = np.zeros(n + 1, dtype=np.int64)
    for j in range(1, n + 1):
        min_x = max_x = xs[j - 1]
        min_y = max_y = ys[j - 1]
        best = _INF
        best_l = 0
        for l in range(1, min(j, cfg.l_max) + 1):
            i = j - l  # window covers points i..j-1
            if xs[i] < min_x:
                min_x = xs[i]
            elif xs[i] > max_x:
                max_x = xs[i]
            if ys[i] < min_y:
                min_y = ys[i]
            elif ys[i] > max_y:
                max_y = ys[i]
            first_seg = i == 0  # relaxed: any length in [1, l_max]
            if not first_seg and (l < cfg.l_min or F[i] == _INF):
                continue
            cost = (0.0 if first_seg else F[i]) + (max_x - min_x) * (max_y - min_y)
            if cost < best:
                best = cost
                best_l = l
        F[j] = best
        choice[j] = best_l

    bounds: list[tuple[int, int]] = []
    j = n
    while j > 0:
        l = int(choice[j])
        bounds.append((j - l, j - 1))
        j -= l
    bounds.reverse()
    return bounds


def brute_force_partition(points, cfg: SegmentationConfig):
    """Exhaustive test oracle: (best bounds, best total area). n <= 20 only."""
    xs, ys = _as_arrays(points)
    n = len(xs)
    if n == 0:
        raise ValueError("cannot partition an empty trajectory")
    if n > 20:
        raise ValueError("brute-force partition limited to n <= 20")

    def area(i, j):
        return float(
            (xs[i : j + 1].max() - xs[i : j + 1].min()) * (ys[i : j + 1].max() - ys[i : j + 1].min())
        )

    best_area = _INF
    best_bounds = None

    def recurse(start, acc, acc_area):
        nonlocal best_area, best_bounds
        if start == n:
            if acc_area < best_area:
                best_area = acc_area
                best_bounds = list(acc)
            return
        lo = 1 if start == 0 else cfg.l_min
        for l in range(lo, cfg.l_max + 1):
            end = start + l - 1
            if end >= n:
                break
            acc.append((start, end))
            recurse(end + 1, acc, acc_area + area(start, end))
            acc.pop()

    recurse(0, [], 0.0)
    if best_bounds is None:
        raise ValueError("no feasible partition (unreachable under first-segment relaxation)")
    return best_bounds, best_area


def total_area(points, bounds) -> float:
    xs, ys = _as_arrays(points)
    tot = 0.0
    for s, e in bounds:
        tot += float(
            (xs[s : e + 1].max() - xs[s : e + 1].min()) * (ys[s : e + 1].max() - ys[s : e + 1].min())
        )
    return tot


def _as_arrays(points):
    if isinstance(points, tuple) and len(points) == 2 and isinstance(points[0], np.ndarray):
        return points
    arr = np.asarray([(p.x, p.y) if hasattr(p, "x") else p for p in points], dtype=np.float64)
    if arr.size == 0:
        return np.empty(0), np.empty(0)
    return arr[:, 0], arr[:, 1]
