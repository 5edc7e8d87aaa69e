from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .. import constants
from ..anthropometrics import Measurements
from ..errors import Disconnected, EmptyCloud, InputError
from ..geometry import JointId, PointCloud, Skeleton15

log = logging.getLogger(__name__)

# zero-length edges would vanish from the sparse graph
_MIN_EDGE = 1e-12


@dataclass(frozen=True)
class GenderRatios:
    # geodesic over Euclidean shoulder-to-shoulder distance across the chest
    ratio1: float
    # hip girth over waist girth
    ratio2: float

    def as_tuple(self) -> tuple[float, float]:
        return self.ratio1, self.ratio2


class SurfaceGraph:
    """Symmetric k-nearest-neighbour graph of a cloud, with Euclidean edge lengths."""

    def __init__(
        self,
        cloud: PointCloud,
        k: int = constants.GEODESIC_K,
        max_edge: float = constants.GEODESIC_MAX_EDGE,
    ) -> None:
        if len(cloud) == 0:
            raise EmptyCloud("cannot build a surface graph on an empty cloud")
        if k < 1 or max_edge <= 0:
            raise InputError("graph needs k >= 1 and a positive max edge length")
        self.points = cloud.points
        self.tree = cKDTree(self.points)
        count = len(self.points)
        neighbors = min(k + 1, count)
        dist, idx = self.tree.query(self.points, k=neighbors, distance_upper_bound=max_edge)
        dist, idx = dist.reshape(count, neighbors), idx.reshape(count, neighbors)
        rows = np.repeat(np.arange(count), neighbors)
        keep = np.isfinite(dist.ravel()) & (idx.ravel() != rows)
        graph = sparse.csr_matrix(
            (np.maximum(dist.ravel()[keep], _MIN_EDGE), (rows[keep], idx.ravel()[keep])),
            shape=(count, count),
        )
        self.graph = graph.maximum(graph.T).tocsr()

    def snap(self, point: np.ndarray, tolerance: float) -> int:
        distance, index = self.tree.query(np.asarray(point, dtype=np.float64))
        if not distance <= tolerance:
            raise Disconnected(
                f"no cloud point within {tolerance} m of {np.round(point, 3).tolist()}"
            )
        return int(index)

    def distance(
        self, a: np.ndarray, b: np.ndarray, snap: float = constants.GEODESIC_SNAP
    ) -> float:
        source, target = self.snap(a, snap), self.snap(b, snap)
        if source == target:
            return 0.0
        lengths = csgraph.dijkstra(self.graph, directed=False, indices=source)
        length = float(lengths[target])
        if not np.isfinite(length):
            raise Disconnected("the two points lie on disconnected parts of the surface")
        return length


def geodesic_distance(
    cloud: PointCloud,
    a: np.ndarray,
    b: np.ndarray,
    *,
    snap: float = constants.GEODESIC_SNAP,
    k: int = constants.GEODESIC_K,
    max_edge: float = constants.GEODESIC_MAX_EDGE,
) -> float:
    """Shortest path in metres over the cloud surface between the points nearest a and b."""
    return SurfaceGraph(cloud, k, max_edge).distance(a, b, snap)


def gender_ratios(
    cloud: PointCloud,
    sk: Skeleton15,
    m: Measurements,
    *,
    snap: float = constants.RATIO_SNAP,
    k: int = constants.GEODESIC_K,
    max_edge: float = constants.GEODESIC_MAX_EDGE,
) -> GenderRatios:
    left, right = sk[JointId.LS], sk[JointId.RS]
    straight = float(np.linalg.norm(right - left))
    if straight <= 0:
        raise InputError("shoulders coincide")
    curved = geodesic_distance(cloud, left, right, snap=snap, k=k, max_edge=max_edge)
    if m.girth_waist <= 0:
        raise InputError("waist girth must be positive")
    ratios = GenderRatios(curved / straight, m.girth_hip / m.girth_waist)
    log.debug("Gender ratios %s", ratios)
    return ratios
