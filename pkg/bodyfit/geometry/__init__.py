from ._camera import project, project_many, unproject, unproject_pixel
from ._normals import estimate_normals, voxel_downsample
from ._silhouette import extract_silhouette_contour, trace_boundary
from .wrappers import (
    JOINT_ORDER,
    CameraIntrinsics,
    Contour2D,
    DepthFrame,
    JointId,
    PointCloud,
    Skeleton15,
)

__all__ = (
    "JOINT_ORDER",
    "CameraIntrinsics",
    "Contour2D",
    "DepthFrame",
    "JointId",
    "PointCloud",
    "Skeleton15",
    "estimate_normals",
    "extract_silhouette_contour",
    "project",
    "project_many",
    "trace_boundary",
    "unproject",
    "unproject_pixel",
    "voxel_downsample",
)
