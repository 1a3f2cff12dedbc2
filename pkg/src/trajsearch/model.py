"""Trajectory storage: immutable historical trajectories and the query object.

Point and segment indices are 0-based throughout the package; a segment
(start, end) covers points start..end inclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Mbr, PlanarPoint, ProjectionRef

__all__ = ["Trajectory", "SegmentRef", "TrajectoryStore", "MovingObjectState"]


@dataclass(frozen=True)
class Trajectory:
    """A historical trajectory with its segmentation boundaries.

    xs/ys are separate contiguous float64 arrays so the distance kernels
    can take zero-copy prefix slices.
    """

    traj_id: int
    xs: np.ndarray
    ys: np.ndarray
    seg_starts: np.ndarray  # int32, 0-based inclusive
    seg_ends: np.ndarray
    seg_mbrs: np.ndarray = field(default=None)  # (n_segments, 4): min_x,min_y,max_x,max_y
    seg_ptr: np.ndarray = field(default=None, compare=False)  # int64 run delimiters for the kernels

    def __post_init__(self):
        if len(self.xs) == 0:
            raise ValueError("trajectory must contain at least one point")
        if self.seg_mbrs is None:
            object.__setattr__(self, "seg_mbrs", _segment_mbrs(self.xs, self.ys, self.seg_starts, self.seg_ends))
        ptr = np.empty(len(self.seg_starts) + 1, dtype=np.int64)
        ptr[:-1] = self.seg_starts
        ptr[-1] = len(self.xs)
        object.__setattr__(self, "seg_ptr", ptr)

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def n_segments(self) -> int:
        return len(self.seg_starts)

    def point(self, idx: int) -> PlanarPoint:
        return PlanarPoint(float(self.xs[idx]), float(self.ys[idx]))

    def points(self):
        return [PlanarPoint(float(x), float(y)) for x, y in zip(self.xs, self.ys)]

    def segment_of(self, point_idx: int) -> int:
        """Index of the segment containing the given point."""
        u = int(np.searchsorted(self.seg_starts, point_idx, side="right")) - 1
        if u < 0 or point_idx > self.seg_ends[u]:
            raise IndexError(f"point index {point_idx} outside trajectory segments")
        return u

    def segment_mbr(self, u: int) -> Mbr:
        m = self.seg_mbrs[u]
        return Mbr(float(m[0]), float(m[1]), float(m[2]), float(m[3]))

    def sub_points(self, end_idx: int) -> tuple[np.ndarray, np.ndarray]:
        """Zero-copy view of the prefix ending at end_idx (inclusive)."""
        if not 0 <= end_idx < self.n:
            raise IndexError(f"end index {end_idx} out of range for n={self.n}")
        return self.xs[: end_idx + 1], self.ys[: end_idx + 1]


def _segment_mbrs(xs, ys, starts, ends) -> np.ndarray:
    mbrs = np.empty((len(starts), 4), dtype=np.float64)
    for u, (s, e) in enumerate(zip(starts, ends)):
        sx, sy = xs[s : e + 1], ys[s : e + 1]
        mbrs[u] = (sx.min(), sy.min(), sx.max(), sy.max())
    return mbrs


def make_trajectory(traj_id: int, points, bounds) -> Trajectory:
    """Build a Trajectory from point pairs and (start, end) segment bounds."""
    arr = np.asarray([(p.x, p.y) if isinstance(p, PlanarPoint) else p for p in points], dtype=np.float64)
    starts = np.asarray([b[0] for b in bounds], dtype=np.int32)
    ends = np.asarray([b[1] for b in bounds], dtype=np.int32)
    return Trajectory(traj_id, np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1]), starts, ends)


@dataclass(frozen=True)
class SegmentRef:
    """One indexed segment: owning trajectory, position within it, and MBR."""

    traj_id: int
    seg_index: int
    start_idx: int
    end_idx: int
    mbr: Mbr


class TrajectoryStore:
    """Immutable-after-build map from trajectory id to Trajectory."""

    def __init__(self, projection: ProjectionRef | None = None):
        self.projection = projection
        self._trajectories: dict[int, Trajectory] = {}

    def add(self, t: Trajectory) -> None:
        if t.traj_id in self._trajectories:
            raise ValueError(f"duplicate trajectory id {t.traj_id}")
        self._trajectories[t.traj_id] = t

    def get(self, traj_id: int) -> Trajectory:
        return self._trajectories[traj_id]

    def __contains__(self, traj_id: int) -> bool:
        return traj_id in self._trajectories

    def __len__(self) -> int:
        return len(self._trajectories)

    def ids(self):
        return sorted(self._trajectories)

    def trajectories(self):
        return [self._trajectories[i] for i in self.ids()]

    def segment_refs(self):
        out = []
        for t in self.trajectories():
            for u in range(t.n_segments):
                out.append(
                    SegmentRef(t.traj_id, u, int(t.seg_starts[u]), int(t.seg_ends[u]), t.segment_mbr(u))
                )
        return out

    def total_points(self) -> int:
        return sum(t.n for t in self._trajectories.values())


@dataclass(frozen=True)
class MovingObjectState:
    """The query object: its growing history and fixed destination."""

    destination: PlanarPoint
    history: tuple = ()

    @property
    def c(self) -> int:
        return len(self.history)

    @property
    def current(self) -> PlanarPoint:
        if not self.history:
            raise ValueError("no observations yet")
        return self.history[-1]

    def append_observation(self, p: PlanarPoint) -> "MovingObjectState":
        return MovingObjectState(self.destination, self.history + (p,))
