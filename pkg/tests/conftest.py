import numpy as np
import pytest

from trajsearch.geometry import PlanarPoint
from trajsearch.index import build_index
from trajsearch.model import Trajectory, TrajectoryStore, make_trajectory
from trajsearch.segmentation import SegmentationConfig


def random_store(rng, n_traj, n_range=(20, 60), extent=100.0, step=2.0):
    """Random-walk trajectories with trivial single-segment bounds."""
    store = TrajectoryStore()
    for i in range(n_traj):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        start = rng.uniform(0.0, extent, 2)
        steps = rng.normal(0.0, step, (n - 1, 2))
        pts = np.vstack([start, start + np.cumsum(steps, axis=0)])
        store.add(
            Trajectory(
                i,
                np.ascontiguousarray(pts[:, 0]),
                np.ascontiguousarray(pts[:, 1]),
                np.asarray([0], dtype=np.int32),
                np.asarray([n - 1], dtype=np.int32),
            )
        )
    return store


def random_indexed_world(seed, n_traj, n_range=(20, 60), extent=100.0, l_min=4, l_max=8, cap=8):
    rng = np.random.default_rng(seed)
    store = random_store(rng, n_traj, n_range, extent)
    return build_index(store, SegmentationConfig(l_min, l_max), cap), rng


@pytest.fixture
def example_world():
    """The worked-example trajectory plus a far translated copy."""
    base = [(1, 2), (3, 3), (5, 3), (6, 5), (7, 6), (9, 7)]
    t1 = make_trajectory(1, base, [(0, 2), (3, 5)])
    t2 = make_trajectory(2, [(x + 100, y + 100) for x, y in base], [(0, 2), (3, 5)])
    store = TrajectoryStore()
    store.add(t1)
    store.add(t2)
    return store


EXAMPLE_HISTORY = [PlanarPoint(2, 1), PlanarPoint(4, 2), PlanarPoint(5, 2), PlanarPoint(6, 3)]
EXAMPLE_DEST = PlanarPoint(9, 5)
