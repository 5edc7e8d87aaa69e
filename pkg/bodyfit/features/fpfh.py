from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .. import constants
from ..errors import InputError, SparseNeighborhood
from ..geometry import PointCloud

log = logging.getLogger(__name__)

DESCRIPTOR_DIM = 3 * constants.FPFH_BINS


@dataclass(frozen=True, eq=False)
class FpfhDescriptor:
    # alpha, phi and theta histograms, each summing to 1
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(values) != DESCRIPTOR_DIM:
            raise InputError(f"descriptor has {len(values)} bins, expected {DESCRIPTOR_DIM}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def histograms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        alpha, phi, theta = np.split(self.values, 3)
        return alpha, phi, theta


def pair_features(
    source: np.ndarray,
    source_normal: np.ndarray,
    targets: np.ndarray,
    target_normals: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Darboux-frame angles (alpha, phi, theta) between one oriented point and many.

    As in the usual point feature formulation, each pair is expressed from the point whose
    normal makes the smaller angle with the connecting line, which makes the features
    independent of which point of the pair is the source.
    """
    delta = targets - source
    distance = np.linalg.norm(delta, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = delta / distance[:, None]
    cos_source = direction @ source_normal
    cos_target = np.einsum("ij,ij->i", direction, target_normals)

    swap = np.abs(cos_source) < np.abs(cos_target)
    u = np.where(swap[:, None], target_normals, source_normal)
    other = np.where(swap[:, None], source_normal, target_normals)
    direction = np.where(swap[:, None], -direction, direction)
    phi = np.where(swap, -cos_target, cos_source)

    v = np.cross(direction, u)
    v_length = np.linalg.norm(v, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = v / v_length[:, None]
    w = np.cross(u, v)
    alpha = np.einsum("ij,ij->i", v, other)
    theta = np.arctan2(np.einsum("ij,ij->i", w, other), np.einsum("ij,ij->i", u, other))

    # coincident points or normals parallel to the connecting line have no frame
    degenerate = (distance <= 0) | (v_length <= 1e-12)
    alpha[degenerate] = 0.0
    phi[degenerate] = 0.0
    theta[degenerate] = 0.0
    return alpha, phi, theta


def _bin(values: np.ndarray, low: float, high: float, bins: int) -> np.ndarray:
    index = np.floor((values - low) / (high - low) * bins).astype(np.int64)
    return np.clip(index, 0, bins - 1)


def _normalized(histogram: np.ndarray, bins: int) -> np.ndarray:
    histogram = histogram.reshape(3, bins)
    totals = histogram.sum(axis=1, keepdims=True)
    return np.divide(
        histogram, totals, out=np.zeros_like(histogram), where=totals > 0
    ).reshape(-1)


class FpfhEstimator:
    """
    Fast point feature histograms over one oriented cloud.

    Points without a usable normal are ignored. Simplified histograms are cached per point,
    so descriptors at neighbouring query points share work.
    """

    def __init__(
        self,
        cloud: PointCloud,
        radius: float = constants.FPFH_RADIUS,
        *,
        bins: int = constants.FPFH_BINS,
        min_neighbors: int = constants.FPFH_MIN_NEIGHBORS,
    ) -> None:
        if cloud.normals is None:
            raise InputError("FPFH needs a cloud with normals")
        if radius <= 0:
            raise InputError("FPFH radius must be positive")
        usable = cloud.normal_mask
        self.points = cloud.points[usable]
        self.normals = cloud.normals[usable]
        self.radius = radius
        self.bins = bins
        self.min_neighbors = min_neighbors
        self._tree = cKDTree(self.points) if len(self.points) else None
        self._neighbors: dict[int, np.ndarray] = {}
        self._spfh: dict[int, np.ndarray] = {}

    def neighbors(self, index: int) -> np.ndarray:
        try:
            return self._neighbors[index]
        except KeyError:
            pass
        assert self._tree is not None
        found = np.asarray(self._tree.query_ball_point(self.points[index], self.radius))
        found = np.sort(found[found != index]).astype(np.int64)
        self._neighbors[index] = found
        return found

    def spfh(self, index: int) -> np.ndarray:
        """Unnormalized simplified histogram of one point against its radius neighbours."""
        try:
            return self._spfh[index]
        except KeyError:
            pass
        neighbors = self.neighbors(index)
        alpha, phi, theta = pair_features(
            self.points[index],
            self.normals[index],
            self.points[neighbors],
            self.normals[neighbors],
        )
        bins = self.bins
        histogram = np.concatenate(
            (
                np.bincount(_bin(alpha, -1.0, 1.0, bins), minlength=bins),
                np.bincount(_bin(phi, -1.0, 1.0, bins), minlength=bins),
                np.bincount(_bin(theta, -math.pi, math.pi, bins), minlength=bins),
            )
        ).astype(np.float64)
        histogram = _normalized(histogram, bins)
        self._spfh[index] = histogram
        return histogram

    def nearest(self, point: np.ndarray) -> int:
        if self._tree is None:
            raise SparseNeighborhood("cloud has no point with a usable normal")
        _, index = self._tree.query(np.asarray(point, dtype=np.float64))
        return int(index)

    def descriptor(self, query_point: np.ndarray) -> FpfhDescriptor:
        index = self.nearest(query_point)
        neighbors = self.neighbors(index)
        if len(neighbors) < self.min_neighbors:
            raise SparseNeighborhood(
                f"{len(neighbors)} neighbour(s) within {self.radius} m,"
                f" {self.min_neighbors} needed"
            )
        distances = np.linalg.norm(self.points[neighbors] - self.points[index], axis=1)
        histogram = self.spfh(index).copy()
        weighted = np.zeros_like(histogram)
        for neighbor, distance in zip(neighbors, distances):
            if distance > 0:
                weighted += self.spfh(int(neighbor)) / distance
        histogram += weighted / len(neighbors)
        return FpfhDescriptor(_normalized(histogram, self.bins))


def fpfh_at(
    cloud: PointCloud,
    query_point: np.ndarray,
    radius: float = constants.FPFH_RADIUS,
    *,
    min_neighbors: int = constants.FPFH_MIN_NEIGHBORS,
) -> FpfhDescriptor:
    """FPFH of the cloud point nearest to `query_point`."""
    return FpfhEstimator(cloud, radius, min_neighbors=min_neighbors).descriptor(query_point)
