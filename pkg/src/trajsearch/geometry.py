"""Planar geometric primitives: points, rectangles, projection.

All coordinates are meters in a local equirectangular projection; every
distance in the package is plain 2-D Euclidean on these values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PlanarPoint",
    "Mbr",
    "ProjectionRef",
    "euclid",
    "point_segment_distance",
    "mbr_of",
    "mindist_point_mbr",
    "project",
]


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float


@dataclass(frozen=True)
class Mbr:
    """Axis-aligned minimum bounding rectangle."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError("inverted MBR bounds")

    @property
    def area(self) -> float:
        return (self.max_x - self.min_x) * (self.max_y - self.min_y)

    def union(self, other: "Mbr") -> "Mbr":
        return Mbr(
            min(self.min_x, other.min_x),
            min(self.min_y, other.min_y),
            max(self.max_x, other.max_x),
            max(self.max_y, other.max_y),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.min_x, self.min_y, self.max_x, self.max_y])


@dataclass(frozen=True)
class ProjectionRef:
    """Anchor of the local lon/lat -> meters projection.

    Persisted with every index file so query coordinates are projected
    identically to the indexed data.
    """

    ref_lon: float
    ref_lat: float
    earth_radius: float = 6_371_000.0

    def __post_init__(self):
        if not (-180.0 <= self.ref_lon <= 180.0 and -90.0 <= self.ref_lat <= 90.0):
            raise ValueError("projection reference out of lon/lat range")
        if self.earth_radius <= 0:
            raise ValueError("earth radius must be positive")


def euclid(a: PlanarPoint, b: PlanarPoint) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def point_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> float:
    """Distance from p to the line segment a-b (a == b degenerates to a point)."""
    ax, ay = b.x - a.x, b.y - a.y
    px, py = p.x - a.x, p.y - a.y
    denom = ax * ax + ay * ay
    if denom == 0.0:
        return math.hypot(px, py)
    t = (px * ax + py * ay) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - t * ax, py - t * ay)


def mbr_of(points) -> Mbr:
    """Tightest MBR of a non-empty point sequence (PlanarPoints or (n,2) array)."""
    if isinstance(points, np.ndarray):
        if points.size == 0:
            raise ValueError("cannot compute MBR of an empty point set")
        return Mbr(
            float(points[:, 0].min()),
            float(points[:, 1].min()),
            float(points[:, 0].max()),
            float(points[:, 1].max()),
        )
    pts = list(points)
    if not pts:
        raise ValueError("cannot compute MBR of an empty point set")
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    return Mbr(min(xs), min(ys), max(xs), max(ys))


def mindist_point_mbr(p: PlanarPoint, m: Mbr) -> float:
    """Minimum distance from p to any point of m (0 when p is inside).

    Clamp-based rectangle mindist: a true lower bound on the distance from
    p to every point contained in m, which is what the pruning steps rely
    on. A corner-only minimum would not be a lower bound for points near a
    long edge, so it is not used anywhere.
    """
    dx = max(m.min_x - p.x, 0.0, p.x - m.max_x)
    dy = max(m.min_y - p.y, 0.0, p.y - m.max_y)
    return math.hypot(dx, dy)


def project(lon: float, lat: float, ref: ProjectionRef) -> PlanarPoint:
    """Equirectangular projection of lon/lat degrees into local meters."""
    rad = math.pi / 180.0
    x = ref.earth_radius * (lon - ref.ref_lon) * rad * math.cos(ref.ref_lat * rad)
    y = ref.earth_radius * (lat - ref.ref_lat) * rad
    return PlanarPoint(x, y)
