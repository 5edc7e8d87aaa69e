from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from . import constants
from .errors import DegenerateInput, DegenerateSkeleton, EmptyCloud, FormatError, InputError
from .geometry import PointCloud, Skeleton15

log = logging.getLogger(__name__)

_ORTHONORMAL_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """x -> rotation @ x + translation, in metres."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.isfinite(rotation).all() and np.isfinite(translation).all()):
            raise InputError("rigid transform has non-finite entries")
        if np.abs(rotation.T @ rotation - np.eye(3)).max() > _ORTHONORMAL_TOLERANCE:
            raise InputError("rotation is not orthonormal")
        if np.linalg.det(rotation) < 0:
            raise InputError("rotation is a reflection")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def apply_cloud(self, cloud: PointCloud) -> PointCloud:
        return cloud.transformed(self.rotation, self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """The transform applying `other` first, then this one."""
        return RigidTransform(
            self.rotation @ other.rotation, self.rotation @ other.translation + self.translation
        )

    def inverse(self) -> RigidTransform:
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def to_dict(self) -> dict[str, list[float]]:
        return {
            "rotation": [float(value) for value in self.rotation.reshape(-1)],
            "translation": [float(value) for value in self.translation],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> RigidTransform:
        try:
            return cls(np.asarray(data["rotation"], float), np.asarray(data["translation"], float))
        except (KeyError, TypeError, ValueError, InputError) as exc:
            raise FormatError(f"invalid rigid transform ({exc})") from None


def fit_rigid(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """
    Least-squares rotation and translation taking `source` rows onto `target` rows.

    Closed form from the SVD of the cross-covariance, with the reflection case folded back
    into a proper rotation.
    """
    source = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if len(source) != len(target):
        raise InputError("source and target need the same number of points")
    if len(source) < 3:
        raise DegenerateInput("a rigid fit needs at least three point pairs")

    source_centroid = source.mean(axis=0)
    target_centroid = target.mean(axis=0)
    covariance = (source - source_centroid).T @ (target - target_centroid)
    u, singular, vt = np.linalg.svd(covariance)
    if singular[0] <= 0 or singular[1] <= 1e-9 * singular[0]:
        raise DegenerateInput("points are collinear or coincident")

    sign = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    rotation = vt.T @ np.diag([1.0, 1.0, sign]) @ u.T
    return RigidTransform(rotation, target_centroid - rotation @ source_centroid)


def skeleton_align_init(source_sk: Skeleton15, target_sk: Skeleton15) -> RigidTransform:
    try:
        return fit_rigid(source_sk.as_array(), target_sk.as_array())
    except DegenerateInput as exc:
        raise DegenerateSkeleton(f"cannot align skeletons: {exc}") from None


@dataclass(frozen=True, eq=False)
class IcpReport:
    transform: RigidTransform
    # mean kept-pair distance before each update, in metres
    errors: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def to_dict(self) -> dict[str, Any]:
        matrix = self.transform.to_dict()
        return {
            "iterations": self.iterations,
            "errors_m": list(self.errors),
            "rotation": matrix["rotation"],
            "translation": matrix["translation"],
            "converged": self.converged,
        }


def icp_register(
    source: PointCloud,
    target: PointCloud,
    init: RigidTransform | None = None,
    max_iterations: int = constants.ICP_MAX_ITERATIONS,
    convergence_delta: float = constants.ICP_CONVERGENCE_DELTA,
    *,
    reject_factor: float = constants.ICP_REJECT_FACTOR,
) -> IcpReport:
    """
    Point-to-point ICP of `source` onto `target`.

    Pairs farther apart than `reject_factor` times the median pair distance are left out of
    both the error and the update. An iteration that would raise the error is undone and
    ends the run, so the reported errors never increase.
    """
    if len(source) == 0 or len(target) == 0:
        raise EmptyCloud("ICP needs non-empty source and target clouds")
    if max_iterations < 1:
        raise InputError("max_iterations must be at least 1")
    if convergence_delta < 0:
        raise InputError("convergence_delta must be non-negative")

    tree = cKDTree(target.points)
    current = init or RigidTransform.identity()
    previous = current
    errors: list[float] = []
    converged = False
    for iteration in range(1, max_iterations + 1):
        moved = current.apply(source.points)
        distances, indices = tree.query(moved)
        median = float(np.median(distances))
        keep = distances <= reject_factor * median if median > 0 else np.ones(len(moved), bool)
        error = float(distances[keep].mean())
        log.debug("ICP iteration %d: mean error %.5f m", iteration, error)

        if errors and error > errors[-1]:
            current = previous
            converged = True
            break
        errors.append(error)
        if error == 0 or (len(errors) > 1 and errors[-2] - error < convergence_delta):
            converged = True
            break
        if iteration == max_iterations:
            break
        try:
            step = fit_rigid(moved[keep], target.points[indices[keep]])
        except DegenerateInput:
            converged = True
            break
        previous, current = current, step.compose(current)

    log.info(
        "ICP finished after %d iteration(s), mean error %.4f m", len(errors), errors[-1]
    )
    return IcpReport(current, errors, len(errors), converged)
