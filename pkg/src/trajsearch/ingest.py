"""AIS CSV ingestion: parse, clean, and assemble a TrajectoryStore.

Two named schemas are built in (the Danish Maritime Authority dump and the
NOAA / US Coast Guard handler format) plus a custom column map. Malformed
rows are counted per reason and never abort the stream; only configuration
problems (unknown schema, missing columns) are fatal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .geometry import ProjectionRef, project
from .model import Trajectory, TrajectoryStore

__all__ = [
    "GpsFix",
    "IngestConfig",
    "IngestConfigError",
    "RejectionReport",
    "IngestStats",
    "parse_ais_csv",
    "build_trajectories",
]


@dataclass(frozen=True)
class GpsFix:
    mmsi: int
    t: float  # epoch seconds
    lon: float
    lat: float


class IngestConfigError(Exception):
    pass


@dataclass(frozen=True)
class IngestConfig:
    """schema: "dma", "noaa", or a column map {mmsi, timestamp, lat, lon,
    time_format}; gap_split splits voyages at silent gaps (seconds)."""

    schema: object = "noaa"
    gap_split: float = 1800.0
    min_points: int = 40
    dedup_window: float = 0.0

    def __post_init__(self):
        if self.gap_split <= 0:
            raise ValueError("gap_split must be positive")
        if self.min_points < 1:
            raise ValueError("min_points must be >= 1")


_SCHEMAS = {
    "noaa": {"mmsi": "MMSI", "timestamp": "BaseDateTime", "lat": "LAT", "lon": "LON",
             "time_format": "%Y-%m-%dT%H:%M:%S"},
    "dma": {"mmsi": "MMSI", "timestamp": "# Timestamp", "lat": "Latitude", "lon": "Longitude",
            "time_format": "%d/%m/%Y %H:%M:%S"},
}


@dataclass
class RejectionReport:
    rows: int = 0
    accepted: int = 0
    reasons: dict = field(default_factory=dict)
    records: list = field(default_factory=list)  # (line number, reason)

    @property
    def rejected(self) -> int:
        return sum(self.reasons.values())

    def reject(self, lineno: int, reason: str) -> None:
        self.reasons[reason] = self.reasons.get(reason, 0) + 1
        self.records.append((lineno, reason))

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for lineno, reason in self.records:
                f.write(f"{lineno}\t{reason}\n")


def _resolve_schema(schema) -> dict:
    if isinstance(schema, str):
        try:
            return _SCHEMAS[schema.lower()]
        except KeyError:
            raise IngestConfigError(f"unknown schema {schema!r}; expected 'dma' or 'noaa'")
    if isinstance(schema, dict):
        missing = {"mmsi", "timestamp", "lat", "lon"} - set(schema)
        if missing:
            raise IngestConfigError(f"custom schema missing keys: {sorted(missing)}")
        return {"time_format": "%Y-%m-%dT%H:%M:%S", **schema}
    raise IngestConfigError("schema must be a name or a column map")


def _parse_time(text: str, fmt: str) -> float:
    dt = datetime.strptime(text.strip(), fmt)
    return dt.replace(tzinfo=timezone.utc).timestamp()


def parse_ais_csv(stream, cfg: IngestConfig):
    """Parse a CSV text stream into fixes. Returns (fixes, RejectionReport)."""
    schema = _resolve_schema(cfg.schema)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestConfigError("empty input: header row required")
    cols = {name.strip(): i for i, name in enumerate(header)}
    try:
        i_mmsi = cols[schema["mmsi"].strip()]
        i_time = cols[schema["timestamp"].strip()]
        i_lat = cols[schema["lat"].strip()]
        i_lon = cols[schema["lon"].strip()]
    except KeyError as e:
        raise IngestConfigError(f"required column {e.args[0]!r} not in header")

    fixes: list[GpsFix] = []
    report = RejectionReport()
    needed = max(i_mmsi, i_time, i_lat, i_lon)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        report.rows += 1
        if len(row) <= needed:
            report.reject(lineno, "missing-field")
            continue
        try:
            mmsi = int(row[i_mmsi])
            lat = float(row[i_lat])
            lon = float(row[i_lon])
        except ValueError:
            report.reject(lineno, "bad-coordinate")
            continue
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0) or not (
            math.isfinite(lat) and math.isfinite(lon)
        ):
            report.reject(lineno, "bad-coordinate")
            continue
        try:
            t = _parse_time(row[i_time], schema["time_format"])
        except ValueError:
            report.reject(lineno, "bad-timestamp")
            continue
        fixes.append(GpsFix(mmsi, t, lon, lat))
        report.accepted += 1
    return fixes, report


@dataclass
class IngestStats:
    input_fixes: int = 0
    stored_points: int = 0
    deduplicated: int = 0
    dropped_short: int = 0
    trajectories: int = 0


def build_trajectories(fixes, cfg: IngestConfig, proj: ProjectionRef | None = None):
    """Group, clean, split, and project fixes into a TrajectoryStore.

    Returns (store, IngestStats). Trajectory ids are assigned densely in
    (mmsi, start time) order so the result is deterministic for a given
    input. Non-increasing timestamps per vessel are always deduplicated so
    every output trajectory is strictly time-ordered.
    """
    stats = IngestStats(input_fixes=len(fixes))
    if proj is None:
        if fixes:
            proj = ProjectionRef(
                float(np.mean([f.lon for f in fixes])),
                float(np.mean([f.lat for f in fixes])),
            )
        else:
            proj = ProjectionRef(0.0, 0.0)

    by_vessel: dict[int, list[GpsFix]] = {}
    for f in fixes:
        by_vessel.setdefault(f.mmsi, []).append(f)

    pieces = []  # (mmsi, start_t, [fixes])
    for mmsi in sorted(by_vessel):
        vf = sorted(by_vessel[mmsi], key=lambda f: f.t)
        run: list[GpsFix] = []
        last_t = None
        for f in vf:
            if last_t is not None and (f.t <= last_t or f.t - last_t < cfg.dedup_window):
                stats.deduplicated += 1
                continue
            if last_t is not None and f.t - last_t > cfg.gap_split:
                pieces.append((mmsi, run[0].t, run))
                run = []
            run.append(f)
            last_t = f.t
        if run:
            pieces.append((mmsi, run[0].t, run))

    pieces.sort(key=lambda p: (p[0], p[1]))
    store = TrajectoryStore(proj)
    next_id = 0
    for _, _, run in pieces:
        if len(run) < cfg.min_points:
            stats.dropped_short += len(run)
            continue
        pts = [project(f.lon, f.lat, proj) for f in run]
        xs = np.asarray([p.x for p in pts])
        ys = np.asarray([p.y for p in pts])
        store.add(
            Trajectory(
                next_id,
                xs,
                ys,
                np.asarray([0], dtype=np.int32),
                np.asarray([len(xs) - 1], dtype=np.int32),
            )
        )
        stats.stored_points += len(xs)
        next_id += 1
    stats.trajectories = next_id
    return store, stats
