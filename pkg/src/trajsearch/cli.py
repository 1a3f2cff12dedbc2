"""Command-line entry point: ingest, build, query, bench.

Exit codes: 0 success, 2 usage/configuration error, 3 IO or format error.
Results go to stdout in a fixed column order (floats printed with 9
significant digits); progress and errors go to stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import _core
from .bench import QueryStream, SweepConfig, run_sweep, write_report
from .distance import DistanceParams
from .geometry import PlanarPoint
from .index import (
    IndexError_,
    QueryConfig,
    SegmentIndex,
    build_index,
    load_store,
    save_store,
)
from .ingest import IngestConfig, IngestConfigError, build_trajectories, parse_ais_csv
from .search import QuerySession
from .segmentation import SegmentationConfig

USAGE_EXIT = 2
IO_EXIT = 3


def _fail(code: int, msg: str):
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(code)


def _load_config(path):
    """Plain key = value lines; '#' starts a comment."""
    cfg = {}
    if path is None:
        return cfg
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        _fail(IO_EXIT, f"cannot read config file: {e}")
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            _fail(USAGE_EXIT, f"bad config line (need key = value): {line!r}")
        key, val = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def _opt(args, config, name, default, cast=str):
    """Flag value if given, else config-file value, else default."""
    val = getattr(args, name, None)
    if val is not None:
        return val
    if name in config:
        try:
            return cast(config[name])
        except ValueError:
            _fail(USAGE_EXIT, f"bad config value for {name}: {config[name]!r}")
    return default


def _parse_strategies(text: str):
    text = text.strip().lower()
    if text in ("all", ""):
        return True, True, True
    if text == "none":
        return False, False, False
    wanted = {part.strip() for part in text.split(",") if part.strip()}
    unknown = wanted - {"s1", "s2", "s3"}
    if unknown:
        _fail(USAGE_EXIT, f"unknown strategies: {sorted(unknown)} (expected s1,s2,s3|all|none)")
    return "s1" in wanted, "s2" in wanted, "s3" in wanted


def _fmt(x: float) -> str:
    return format(x, ".9g")


def make_parser():
    p = argparse.ArgumentParser(prog="trajsearch", description=__doc__)
    p.add_argument("--config", help="key = value config file; flags override it")
    sub = p.add_subparsers(dest="command", required=True)

    pi = sub.add_parser("ingest", help="parse AIS CSVs into a trajectory store")
    pi.add_argument("inputs", nargs="+", help="input CSV paths")
    pi.add_argument("--schema", choices=["dma", "noaa"])
    pi.add_argument("--gap-split", dest="gap_split", type=float)
    pi.add_argument("--min-points", dest="min_points", type=int)
    pi.add_argument("--dedup-window", dest="dedup_window", type=float)
    pi.add_argument("--out", required=True, help="output store file")
    pi.add_argument("--reject-report", dest="reject_report", help="rejection report path")

    pb = sub.add_parser("build", help="segment a store and build the index")
    pb.add_argument("store", help="store file from 'ingest'")
    pb.add_argument("--lmin", type=int)
    pb.add_argument("--lmax", type=int)
    pb.add_argument("--node-capacity", dest="node_capacity", type=int)
    pb.add_argument("--out", required=True, help="output index file")

    pq = sub.add_parser("query", help="replay a continuous query against an index")
    pq.add_argument("index", help="index file from 'build'")
    pq.add_argument("stream", help="query stream: 'x y' destination header, one point per line")
    pq.add_argument("--k", type=int)
    pq.add_argument("--range", dest="range_", type=float, help="absolute radius in meters")
    pq.add_argument("--candidate-rate", dest="candidate_rate", type=float)
    pq.add_argument("--alpha", type=float)
    pq.add_argument("--theta", type=float)
    pq.add_argument("--granularity", type=int)
    pq.add_argument("--strategies", help="comma list of s1,s2,s3, or all/none")
    pq.add_argument("--threads", type=int, help="accepted for interface parity; scoring is sequential")

    pn = sub.add_parser("bench", help="run a parameter sweep and write CSV/JSON reports")
    pn.add_argument("index", help="index file from 'build'")
    pn.add_argument("sweep", help="sweep config file (key = value)")
    pn.add_argument("--out", required=True, help="report CSV path (JSON written next to it)")
    pn.add_argument("--seed", type=int)
    pn.add_argument("--threads", type=int)
    return p


def cmd_ingest(args, config):
    cfg = IngestConfig(
        schema=_opt(args, config, "schema", "noaa"),
        gap_split=_opt(args, config, "gap_split", 1800.0, float),
        min_points=_opt(args, config, "min_points", 40, int),
        dedup_window=_opt(args, config, "dedup_window", 0.0, float),
    )
    fixes = []
    rows = rejected = 0
    report = None
    for path in args.inputs:
        try:
            with open(path, "r", encoding="utf-8") as f:
                part, rep = parse_ais_csv(f, cfg)
        except OSError as e:
            _fail(IO_EXIT, f"cannot read {path}: {e}")
        except IngestConfigError as e:
            _fail(USAGE_EXIT, str(e))
        fixes.extend(part)
        rows += rep.rows
        rejected += rep.rejected
        report = rep if report is None else report
        if args.reject_report and rep.records:
            rep.write(args.reject_report)
    store, stats = build_trajectories(fixes, cfg)
    try:
        save_store(store, args.out)
    except OSError as e:
        _fail(IO_EXIT, f"cannot write store: {e}")
    print(f"rows {rows}")
    print(f"rejected {rejected}")
    print(f"deduplicated {stats.deduplicated}")
    print(f"dropped_short {stats.dropped_short}")
    print(f"trajectories {stats.trajectories}")
    print(f"points {stats.stored_points}")
    return 0


def cmd_build(args, config):
    lmin = _opt(args, config, "lmin", 30, int)
    lmax = _opt(args, config, "lmax", 50, int)
    cap = _opt(args, config, "node_capacity", 16, int)
    if lmin > lmax:
        _fail(USAGE_EXIT, f"lmin ({lmin}) must be <= lmax ({lmax})")
    try:
        store = load_store(args.store)
    except OSError as e:
        _fail(IO_EXIT, f"cannot read store: {e}")
    except IndexError_ as e:
        _fail(IO_EXIT, f"bad store file: {e}")
    t0 = time.perf_counter()
    from .index import segment_store
    segmented = segment_store(store, SegmentationConfig(lmin, lmax))
    t1 = time.perf_counter()
    idx = build_index(segmented, SegmentationConfig(lmin, lmax), cap, resegment=False)
    t2 = time.perf_counter()
    try:
        idx.save(args.out)
    except OSError as e:
        _fail(IO_EXIT, f"cannot write index: {e}")
    print(f"segmentation_s {_fmt(t1 - t0)}")
    print(f"build_s {_fmt(t2 - t1)}")
    print(f"segments {len(idx)}")
    print(f"index_bytes {Path(args.out).stat().st_size}")
    return 0


def _read_stream_file(path):
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        _fail(IO_EXIT, f"cannot read stream file: {e}")
    pts = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            _fail(IO_EXIT, f"stream line {lineno}: expected 'x y', got {line!r}")
        try:
            pts.append(PlanarPoint(float(parts[0]), float(parts[1])))
        except ValueError:
            _fail(IO_EXIT, f"stream line {lineno}: bad coordinate in {line!r}")
    if len(pts) < 2:
        _fail(IO_EXIT, "stream file needs a destination header and at least one point")
    return pts[0], pts[1:]


def cmd_query(args, config):
    try:
        idx = SegmentIndex.load(args.index)
    except OSError as e:
        _fail(IO_EXIT, f"cannot read index: {e}")
    except IndexError_ as e:
        _fail(IO_EXIT, f"bad index file: {e}")
    dest, stream = _read_stream_file(args.stream)
    k = _opt(args, config, "k", 50, int)
    r = _opt(args, config, "range_", None, float)
    rate = _opt(args, config, "candidate_rate", None, float)
    if r is None and rate is None:
        r = 15.0
    try:
        qcfg = QueryConfig(k, r=r, rate=rate)
        params = DistanceParams(
            alpha=_opt(args, config, "alpha", 0.5, float),
            theta=_opt(args, config, "theta", 0.5, float),
            g=_opt(args, config, "granularity", 1, int),
        )
    except ValueError as e:
        _fail(USAGE_EXIT, str(e))
    s1, s2, s3 = _parse_strategies(_opt(args, config, "strategies", "all"))
    session = QuerySession(idx, dest, params, qcfg, use_s1=s1, use_s2=s2, use_s3=s3)
    latencies = []
    for t, p in enumerate(stream, start=1):
        t0 = time.perf_counter()
        result = session.step(p)
        latencies.append(time.perf_counter() - t0)
        for rank, (tid, bd) in enumerate(result, start=1):
            print(f"{t} {rank} {tid} {_fmt(bd.combined)} {_fmt(bd.history)} {_fmt(bd.target)}")
    print(f"mean_step_ms {_fmt(1000.0 * float(np.mean(latencies)))}")
    print(f"backend {_core.BACKEND}", file=sys.stderr)
    return 0


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_bench(args, config):
    sweep_cfg = _load_config(args.sweep)
    try:
        idx = SegmentIndex.load(args.index)
    except OSError as e:
        _fail(IO_EXIT, f"cannot read index: {e}")
    except IndexError_ as e:
        _fail(IO_EXIT, f"bad index file: {e}")

    def grid(key, default, cast):
        if key in sweep_cfg:
            try:
                return cast(sweep_cfg[key])
            except ValueError:
                _fail(USAGE_EXIT, f"bad sweep grid for {key}: {sweep_cfg[key]!r}")
        return default

    s1, s2, s3 = _parse_strategies(sweep_cfg.get("strategies", "all"))
    sweep = SweepConfig(
        l_min=grid("lmin", [30], _ints),
        l_max=grid("lmax", [50], _ints),
        r=grid("r", [15.0], _floats),
        rate_mode=sweep_cfg.get("rate_mode", "0") in ("1", "true", "yes"),
        k=grid("k", [50], _ints),
        theta=grid("theta", [0.5], _floats),
        alpha=grid("alpha", [0.5], _floats),
        g=grid("g", [1], _ints),
        repetitions=int(sweep_cfg.get("repetitions", 1)),
        timestamps=int(sweep_cfg.get("timestamps", 20)),
        use_s1=s1, use_s2=s2, use_s3=s3,
    )
    for lmin, lmax in zip(sweep.l_min, sweep.l_max):
        if lmin > lmax:
            _fail(USAGE_EXIT, f"sweep lmin {lmin} > lmax {lmax}")
    seed = args.seed if args.seed is not None else int(sweep_cfg.get("seed", 7))
    n_queries = int(sweep_cfg.get("queries", 5))
    l_q = int(sweep_cfg.get("lq", 10))
    queries = _sample_queries(idx.store, n_queries, l_q, sweep.timestamps, seed)
    if not queries:
        _fail(USAGE_EXIT, "store has no trajectory long enough to serve as a query")
    rows = run_sweep(idx, queries, sweep)
    out = Path(args.out)
    write_report(rows, out, out.with_suffix(".json"))
    print(f"rows {len(rows)}")
    print(f"report {out}")
    return 0


def _sample_queries(store, n_queries, l_q, timestamps, seed):
    """Hold out whole trajectories as query objects, deterministically."""
    rng = np.random.default_rng(seed)
    need = l_q + timestamps + 2
    eligible = [t for t in store.trajectories() if t.n >= need]
    rng.shuffle(eligible)
    queries = []
    for t in eligible[:n_queries]:
        pts = t.points()
        queries.append(
            QueryStream(tuple(pts[:l_q]), pts[-1], tuple(pts[l_q : l_q + timestamps + 1]))
        )
    return queries


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    config = _load_config(args.config)
    handler = {
        "ingest": cmd_ingest,
        "build": cmd_build,
        "query": cmd_query,
        "bench": cmd_bench,
    }[args.command]
    return handler(args, config)


if __name__ == "__main__":
    sys.exit(main())
