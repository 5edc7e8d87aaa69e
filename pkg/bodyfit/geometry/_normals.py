from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .. import constants
from ..errors import InputError
from .wrappers import PointCloud

_ORIGIN = np.zeros(3)


def estimate_normals(
    cloud: PointCloud,
    radius: float = constants.NORMAL_RADIUS,
    viewpoint: np.ndarray = _ORIGIN,
    *,
    max_neighbors: int = constants.NORMAL_MAX_NEIGHBORS,
) -> PointCloud:
    """
    PCA normals: smallest-eigenvalue direction of each point's neighbourhood covariance.

    The neighbourhood is every point within `radius`, capped at the `max_neighbors` closest.
    Normals are flipped to face `viewpoint`. Points with fewer than 3 neighbours
    (themselves included) get a NaN normal.
    """
    if radius <= 0:
        raise InputError("normal radius must be positive")
    points = cloud.points
    count = len(points)
    if count == 0:
        return cloud.with_normals(np.empty((0, 3)))

    k = min(max_neighbors, count)
    dist, idx = cKDTree(points).query(points, k=k, distance_upper_bound=radius)
    if k == 1:
        dist, idx = dist[:, None], idx[:, None]
    found = np.isfinite(dist)
    idx = np.where(found, idx, np.arange(count)[:, None])
    weights = found.astype(np.float64)[..., None]
    sizes = found.sum(axis=1)

    neighbourhood = points[idx]
    mean = (neighbourhood * weights).sum(axis=1) / sizes[:, None]
    centered = (neighbourhood - mean[:, None, :]) * weights
    covariance = np.einsum("nki,nkj->nij", centered, centered) / sizes[:, None, None]
    _, vectors = np.linalg.eigh(covariance)
    normals = vectors[:, :, 0].copy()

    towards_view = np.einsum("ni,ni->n", normals, np.asarray(viewpoint) - points)
    normals[towards_view < 0] *= -1
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    normals[sizes < 3] = np.nan
    return cloud.with_normals(normals)


def voxel_downsample(cloud: PointCloud, voxel: float) -> PointCloud:
    """Replace the points of every occupied voxel by their centroid and mean normal."""
    if voxel <= 0:
        raise InputError("voxel size must be positive")
    if len(cloud) == 0:
        return PointCloud(np.empty((0, 3)), None if cloud.normals is None else np.empty((0, 3)))

    keys = np.floor(cloud.points / voxel).astype(np.int64)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    cells = len(counts)
    points = np.column_stack(
        [np.bincount(inverse, weights=cloud.points[:, axis], minlength=cells) for axis in range(3)]
    ) / counts[:, None]

    if cloud.normals is None:
        return PointCloud(points)

    usable = cloud.normal_mask
    normals = np.column_stack(
        [
            np.bincount(
                inverse[usable], weights=cloud.normals[usable, axis], minlength=cells
            )
            for axis in range(3)
        ]
    )
    length = np.linalg.norm(normals, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        normals = np.where(length > 1e-12, normals / length, np.nan)
    return PointCloud(points, normals)
