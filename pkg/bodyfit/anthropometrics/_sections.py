from __future__ import annotations

import numpy as np

from .. import constants
from ..errors import EmptyCloud, EmptySection
from ..geometry import PointCloud
from .wrappers import PrincipalAxes, Tolerances


def cross_section_points(
    cloud: PointCloud,
    axes: PrincipalAxes,
    anchor: np.ndarray,
    tol: Tolerances = Tolerances(),
) -> np.ndarray:
    """
    Points of the angular slab around the plane through `anchor` perpendicular to `axes.u`.

    A point p is kept when |(p - anchor).u| / |p - anchor| < eps3 and it lies closer than
    `tol.section_radius` to the anchor. Returns its (v, w) coordinates in the section plane.
    """
    if len(cloud) == 0:
        raise EmptyCloud("cannot slice an empty cloud")
    offsets = cloud.points - np.asarray(anchor, dtype=np.float64)
    distance = np.linalg.norm(offsets, axis=1)
    along = np.abs(offsets @ axes.u)
    ratio = np.divide(along, distance, out=np.zeros_like(distance), where=distance > 0)
    keep = (ratio < tol.eps3) & (distance < tol.section_radius)
    if np.count_nonzero(keep) < constants.MIN_SECTION_POINTS:
        raise EmptySection(
            f"only {int(np.count_nonzero(keep))} point(s) in the cross-section,"
            f" {constants.MIN_SECTION_POINTS} needed"
        )
    section = offsets[keep]
    return np.column_stack((section @ axes.v, section @ axes.w))
