from __future__ import annotations

import numpy as np

from ..errors import NonPositiveDepth
from .wrappers import CameraIntrinsics, DepthFrame, PointCloud


def unproject(frame: DepthFrame, mask: np.ndarray | None = None) -> PointCloud:
    """
    Turn every valid pixel of the frame into a 3D point (y up, rows growing downward).

    When `mask` is given, only valid pixels inside it are kept.
    """
    intr = frame.intrinsics
    valid = frame.valid if mask is None else frame.valid & mask
    rows, cols = np.nonzero(valid)
    z = frame.data[rows, cols].astype(np.float64) * intr.depth_unit
    points = np.column_stack(
        ((cols - intr.cx) * z / intr.fx, -(rows - intr.cy) * z / intr.fy, z)
    )
    return PointCloud(points, source_pixel=np.column_stack((rows, cols)))


def unproject_pixel(row: float, col: float, z: float, intr: CameraIntrinsics) -> np.ndarray:
    return np.array([(col - intr.cx) * z / intr.fx, -(row - intr.cy) * z / intr.fy, z])


def project(point: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Real-valued (col, row) pixel coordinate of a camera-space point."""
    return project_many(np.asarray(point, dtype=np.float64).reshape(1, 3), intr)[0]


def project_many(points: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = points[:, 2]
    if np.any(z <= 0):
        raise NonPositiveDepth(f"cannot project {int(np.sum(z <= 0))} point(s) with Z <= 0")
    return np.column_stack(
        (intr.cx + intr.fx * points[:, 0] / z, intr.cy - intr.fy * points[:, 1] / z)
    )
