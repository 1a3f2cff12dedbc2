"""Compare the compiled and pure-Python kernel backends.

Usage:
    python3 benchmarks/bench_kernels.py [--n-traj N] [--repeat R]

Times the three hot kernels (nearest-point scan, single-point min-distance
scan, decayed-max history scan) plus a full query session on both backends
and prints a table of mean per-call / per-step latencies.
"""

import argparse
import time

import numpy as np

from trajsearch._core import BACKEND, kernels_py
from trajsearch.bench import synth_world
from trajsearch.distance import DistanceParams, _make_view, find_pivotal
from trajsearch.geometry import PlanarPoint
from trajsearch.index import QueryConfig, build_index
from trajsearch.model import make_trajectory
from trajsearch.search import QuerySession
from trajsearch.segmentation import SegmentationConfig

try:
    from trajsearch._core import _kernels as compiled
except ImportError:
    compiled = None


def _cases(rng, n_cases):
    cases = []
    for _ in range(n_cases):
        n = int(rng.integers(60, 200))
        pts = rng.normal(0, 4.0, (n, 2)).cumsum(axis=0)
        bounds = [(i, min(i + 9, n - 1)) for i in range(0, n, 10)]
        t = make_trajectory(1, pts, bounds)
        c = int(rng.integers(5, 30))
        hist = rng.uniform(pts.min(), pts.max(), (c, 2))
        hx = np.ascontiguousarray(hist[:, 0])
        hy = np.ascontiguousarray(hist[:, 1])
        x, z, _ = find_pivotal(PlanarPoint(hx[-1], hy[-1]), t)
        cases.append((t, hx, hy, _make_view(t, x, z, 1)))
    return cases


def time_kernels(impl, cases, repeat):
    out = {}
    t0 = time.perf_counter()
    for _ in range(repeat):
        for t, hx, hy, view in cases:
            impl.nearest_point_scan(hx[-1], hy[-1], t.xs, t.ys, t.seg_ptr, t.seg_mbrs)
    out["nearest_point_scan"] = (time.perf_counter() - t0) / (repeat * len(cases))
    t0 = time.perf_counter()
    for _ in range(repeat):
        for t, hx, hy, view in cases:
            impl.min_dist_scan(
                hx[-1], hy[-1], view.view_x, view.view_y, view.seg_ptr, view.seg_mbr,
                float("inf"), True,
            )
    out["min_dist_scan"] = (time.perf_counter() - t0) / (repeat * len(cases))
    t0 = time.perf_counter()
    for _ in range(repeat):
        for t, hx, hy, view in cases:
            impl.history_scan(
                hx, hy, 0, 0.5, view.view_x, view.view_y, view.seg_ptr, view.seg_mbr,
                0.5, 1.0, float("inf"), -1.0, -1, 0.0, True, False,
            )
    out["history_scan"] = (time.perf_counter() - t0) / (repeat * len(cases))
    return out


def time_session(index, queries, params, cfg):
    times = []
    for q in queries:
        sess = QuerySession(index, q.destination, params, cfg)
        for p in q.initial:
            sess.step(p)
        for p in q.stream[:20]:
            t0 = time.perf_counter()
            sess.step(p)
            times.append(time.perf_counter() - t0)
    return float(np.mean(times))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-traj", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"active backend: {BACKEND}")
    if compiled is None:
        print("compiled extension not available; benchmarking pure backend only")

    rng = np.random.default_rng(args.seed)
    cases = _cases(rng, 200)
    rows = {"python": time_kernels(kernels_py, cases, args.repeat)}
    if compiled is not None:
        rows["compiled"] = time_kernels(compiled, cases, args.repeat)

    print(f"\n{'kernel':<22}" + "".join(f"{b:>14}" for b in rows))
    names = list(next(iter(rows.values())))
    for name in names:
        cells = "".join(f"{1e6 * rows[b][name]:>11.2f} us" for b in rows)
        print(f"{name:<22}{cells}")
    if compiled is not None:
        print(f"{'speedup':<22}" + "".join(
            f"{rows['python'][n] / rows['compiled'][n]:>13.1f}x" for n in names
        ))

    print("\nend-to-end query session (10 warm-up + 20 timed steps)...")
    store, queries = synth_world(
        args.seed, n_traj=args.n_traj, len_range=(50, 120), n_queries=2,
        l_q=10, n_steps=20, extent=2500.0, step_len=25.0,
    )
    index = build_index(store, SegmentationConfig(30, 50))
    params = DistanceParams(0.5, 0.5, 1)
    cfg = QueryConfig(k=50, r=15.0)

    import trajsearch._core as core

    saved = (core.min_dist_scan, core.history_scan, core.nearest_point_scan)
    try:
        core.min_dist_scan = kernels_py.min_dist_scan
        core.history_scan = kernels_py.history_scan
        core.nearest_point_scan = kernels_py.nearest_point_scan
        py_ms = 1000 * time_session(index, queries, params, cfg)
    finally:
        core.min_dist_scan, core.history_scan, core.nearest_point_scan = saved
    print(f"{'python':<12}{py_ms:>10.2f} ms/step")
    if compiled is not None:
        core.min_dist_scan = compiled.min_dist_scan
        core.history_scan = compiled.history_scan
        core.nearest_point_scan = compiled.nearest_point_scan
        c_ms = 1000 * time_session(index, queries, params, cfg)
        core.min_dist_scan, core.history_scan, core.nearest_point_scan = saved
        print(f"{'compiled':<12}{c_ms:>10.2f} ms/step")
        print(f"{'speedup':<12}{py_ms / c_ms:>10.1f}x")


if __name__ == "__main__":
    main()
