"""Pure-Python (numpy) implementations of the hot distance kernels.

Semantics must match the compiled extension exactly: both keep the running
per-point minimum as a squared distance and take a single sqrt per history
point, so results agree bitwise between the two backends.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["min_dist_scan", "history_scan", "nearest_point_scan"]

_INF = float("inf")


def min_dist_scan(px, py, view_x, view_y, seg_ptr, seg_mbr, init_best, use_s1):
    """Min distance from (px, py) to the view points, with optional MBR pruning.

    seg_ptr delimits runs of view points belonging to one indexed segment;
    seg_mbr holds the corresponding segment MBRs. A segment run is skipped
    when its MBR mindist already reaches the running minimum (pruning is
    exact: skipped points cannot strictly improve the minimum).

    Returns (distance, segments_skipped).
    """
    best2 = init_best * init_best if init_best != _INF else _INF
    skips = 0
    for g in range(len(seg_ptr) - 1):
        if use_s1:
            md2 = _mindist2(px, py, seg_mbr[g])
            if md2 >= best2:
                skips += 1
                continue
        lo, hi = seg_ptr[g], seg_ptr[g + 1]
        dx = view_x[lo:hi] - px
        dy = view_y[lo:hi] - py
        d2 = float(np.min(dx * dx + dy * dy))
        if d2 < best2:
            best2 = d2
    return math.sqrt(best2) if best2 != _INF else _INF, skips


def history_scan(
    hist_x,
    hist_y,
    j_lo,
    theta,
    view_x,
    view_y,
    seg_ptr,
    seg_mbr,
    alpha,
    ttd,
    dist_k,
    init_max,
    init_witness,
    init_wmin,
    use_s1,
    use_s2,
):
    """Decayed-max scan over history points j = c-1 .. j_lo (0-based).

    Per j the undecayed minimum distance to the view is computed (optionally
    skipping segment runs by MBR mindist), decayed by theta**(c-1-j), and the
    running maximum with its witness index is maintained. With use_s2 the
    scan aborts as soon as alpha*running_max + (1-alpha)*ttd >= dist_k,
    which lower-bounds the final combined distance.

    Returns (max, witness, witness_min, pruned, s1_skips, s2_hit).
    """
    c = len(hist_x)
    run_max = init_max
    witness = init_witness
    wmin = init_wmin
    s1_skips = 0
    if use_s2 and alpha * run_max + (1.0 - alpha) * ttd >= dist_k:
        return run_max, witness, wmin, True, 0, True
    for j in range(c - 1, j_lo - 1, -1):
        px = hist_x[j]
        py = hist_y[j]
        best2 = _INF
        for g in range(len(seg_ptr) - 1):
            if use_s1:
                md2 = _mindist2(px, py, seg_mbr[g])
                if md2 >= best2:
                    s1_skips += 1
                    continue
            lo, hi = seg_ptr[g], seg_ptr[g + 1]
            dx = view_x[lo:hi] - px
            dy = view_y[lo:hi] - py
            d2 = float(np.min(dx * dx + dy * dy))
            if d2 < best2:
                best2 = d2
        dist = math.sqrt(best2)
        term = math.pow(theta, c - 1 - j) * dist
        if term > run_max:
            run_max = term
            witness = j
            wmin = dist
            if use_s2 and alpha * run_max + (1.0 - alpha) * ttd >= dist_k:
                return run_max, witness, wmin, True, s1_skips, True
    return run_max, witness, wmin, False, s1_skips, False


def nearest_point_scan(px, py, xs, ys, seg_ptr, seg_mbr):
    """Closest point to (px, py) with MBR pruning of whole segment runs.

    Returns (point index, segment index, distance, segments_skipped); ties
    resolve to the smallest point index because only strict improvements
    replace the running best.
    """
    best2 = _INF
    best_i = -1
    best_g = -1
    skips = 0
    for g in range(len(seg_ptr) - 1):
        if _mindist2(px, py, seg_mbr[g]) >= best2:
            skips += 1
            continue
        lo, hi = seg_ptr[g], seg_ptr[g + 1]
        dx = xs[lo:hi] - px
        dy = ys[lo:hi] - py
        d2 = dx * dx + dy * dy
        j = int(np.argmin(d2))
        if d2[j] < best2:
            best2 = float(d2[j])
            best_i = int(lo) + j
            best_g = g
    return best_i, best_g, math.sqrt(best2) if best2 != _INF else _INF, skips


def _mindist2(px, py, mbr_row):
    dx = mbr_row[0] - px
    if dx < 0.0:
        dx = px - mbr_row[2]
        if dx < 0.0:
            dx = 0.0
    dy = mbr_row[1] - py
    if dy < 0.0:
        dy = py - mbr_row[3]
        if dy < 0.0:
            dy = 0.0
    return dx * dx + dy * dy
