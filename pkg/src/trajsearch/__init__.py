"""Continuous similar-trajectory search for vessel (AIS) data.

Historical trajectories are partitioned into MBR-optimal segments and
indexed in an R-tree; a moving object's top-k most similar histories are
maintained per timestamp under a decayed-history + destination-aware
distance, with safe pruning and incremental reuse keeping each step cheap.
"""

from ._core import BACKEND
from .bench import HitInput, QueryStream, SweepConfig, hit_rate, run_sweep, synth_world
from .distance import (
    DistanceBreakdown,
    DistanceParams,
    ErrorBounds,
    IncrementalEntry,
    SearchStats,
    compute_distance,
    find_pivotal,
    granularity_error_bounds,
    history_distance,
    history_distance_recursive,
    target_distance,
)
from .geometry import (
    Mbr,
    PlanarPoint,
    ProjectionRef,
    euclid,
    mbr_of,
    mindist_point_mbr,
    point_segment_distance,
    project,
)
from .index import QueryConfig, SegmentIndex, build_index
from .ingest import GpsFix, IngestConfig, build_trajectories, parse_ais_csv
from .model import MovingObjectState, SegmentRef, Trajectory, TrajectoryStore, make_trajectory
from .search import QuerySession, ReferenceSession, TopKHeap, reference_topk
from .segmentation import SegmentationConfig, brute_force_partition, partition

__version__ = "0.1.0"
