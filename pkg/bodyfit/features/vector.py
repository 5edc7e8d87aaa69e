from __future__ import annotations

import logging
import os
import struct
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .. import constants
from ..anthropometrics import Measurements
from ..errors import FormatError, InputError, MissingDescriptor, SparseNeighborhood
from ..geometry import (
    JOINT_ORDER,
    DepthFrame,
    JointId,
    PointCloud,
    Skeleton15,
    estimate_normals,
    extract_silhouette_contour,
    unproject,
    voxel_downsample,
)
from ..synth import Gender
from ..utils import read_bytes, write_bytes
from .fpfh import FpfhDescriptor, FpfhEstimator
from .geodesic import GenderRatios, gender_ratios

log = logging.getLogger(__name__)

GLOBAL = slice(0, 4)
GENDER = slice(4, 6)
LOCAL = slice(6, constants.FEATURE_DIM)

# magic, version, dimension
_HEADER = struct.Struct("<4sHH")


@dataclass(frozen=True)
class GroupWeights:
    w_global: float = 1.0
    w_gender: float = 1.0
    w_local: float = 1.0

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if not all(np.isfinite(values)) or min(values) < 0:
            raise InputError("group weights must be finite and non-negative")
        if max(values) == 0:
            raise InputError("at least one group weight must be positive")

    def as_tuple(self) -> tuple[float, float, float]:
        return self.w_global, self.w_gender, self.w_local

    def expand(self) -> np.ndarray:
        """Per-component multipliers over the full feature layout."""
        scale = np.empty(constants.FEATURE_DIM)
        scale[GLOBAL], scale[GENDER], scale[LOCAL] = self.as_tuple()
        return scale


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """
    Unweighted features plus the group weights applied when comparing them.

    Layout: height, sleeve, leg and shoulder lengths in metres; ratio1, ratio2; then one
    33-bin FPFH per joint in `JOINT_ORDER`.
    """

    raw: np.ndarray
    weights: GroupWeights = field(default_factory=GroupWeights)

    def __post_init__(self) -> None:
        raw = np.asarray(self.raw, dtype=np.float64).reshape(-1)
        if len(raw) != constants.FEATURE_DIM:
            raise InputError(
                f"feature vector has {len(raw)} values, expected {constants.FEATURE_DIM}"
            )
        if not np.isfinite(raw).all():
            raise InputError("feature vector has non-finite values")
        object.__setattr__(self, "raw", raw)

    @property
    def values(self) -> np.ndarray:
        return self.raw * self.weights.expand()

    def reweighted(self, weights: GroupWeights) -> FeatureVector:
        return FeatureVector(self.raw, weights)

    def __len__(self) -> int:
        return len(self.raw)


def assemble_feature_vector(
    m: Measurements,
    r: GenderRatios,
    fpfh: Mapping[JointId, FpfhDescriptor],
    w: GroupWeights = GroupWeights(),
) -> FeatureVector:
    descriptors = []
    for joint in JOINT_ORDER:
        try:
            descriptors.append(fpfh[joint].values)
        except KeyError:
            raise MissingDescriptor(f"no FPFH descriptor for joint {joint.value}") from None
    lengths = np.array([m.height, m.sleeve_length, m.leg_length, m.shoulder_length]) / 100
    return FeatureVector(np.concatenate((lengths, r.as_tuple(), *descriptors)), w)


@dataclass(frozen=True)
class FeatureConfig:
    normal_voxel: float = constants.NORMAL_VOXEL
    normal_radius: float = constants.NORMAL_RADIUS
    descriptor_voxel: float = constants.DESCRIPTOR_VOXEL
    fpfh_radius: float = constants.FPFH_RADIUS
    min_neighbors: int = constants.FPFH_MIN_NEIGHBORS
    geodesic_k: int = constants.GEODESIC_K
    geodesic_max_edge: float = constants.GEODESIC_MAX_EDGE
    ratio_snap: float = constants.RATIO_SNAP

    def __post_init__(self) -> None:
        for name in (
            "normal_voxel",
            "normal_radius",
            "descriptor_voxel",
            "fpfh_radius",
            "geodesic_max_edge",
            "ratio_snap",
        ):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")


def oriented_cloud(cloud: PointCloud, config: FeatureConfig = FeatureConfig()) -> PointCloud:
    """Voxel-downsampled copy of a camera-space cloud with normals facing the camera."""
    dense = voxel_downsample(cloud, config.normal_voxel)
    return estimate_normals(dense, config.normal_radius)


def extract_features(
    frame: DepthFrame,
    sk: Skeleton15,
    measurements: Measurements,
    config: FeatureConfig = FeatureConfig(),
    weights: GroupWeights = GroupWeights(),
    *,
    cloud: PointCloud | None = None,
) -> FeatureVector:
    """
    Feature vector of one frontal frame.

    `cloud` is the subject's point cloud when the caller already has it; otherwise the
    frame's largest silhouette is unprojected again.
    """
    if cloud is None:
        mask, _ = extract_silhouette_contour(frame)
        cloud = unproject(frame, mask)
    dense = oriented_cloud(cloud, config)
    sparse = voxel_downsample(dense, config.descriptor_voxel)
    estimator = FpfhEstimator(sparse, config.fpfh_radius, min_neighbors=config.min_neighbors)
    descriptors = {}
    for joint in JOINT_ORDER:
        try:
            descriptors[joint] = estimator.descriptor(sk[joint])
        except SparseNeighborhood as exc:
            exc.measurement = f"fpfh_{joint.value}"
            raise
    ratios = gender_ratios(
        dense,
        sk,
        measurements,
        snap=config.ratio_snap,
        k=config.geodesic_k,
        max_edge=config.geodesic_max_edge,
    )
    return assemble_feature_vector(measurements, ratios, descriptors, weights)


def format_feature_vector(vector: FeatureVector) -> bytes:
    return (
        _HEADER.pack(constants.FEATURE_MAGIC, constants.FEATURE_VERSION, constants.FEATURE_DIM)
        + vector.values.astype("<f4").tobytes()
        + np.asarray(vector.weights.as_tuple(), dtype="<f4").tobytes()
    )


def parse_feature_vector(raw: bytes, *, source: object = "<bytes>") -> FeatureVector:
    expected = _HEADER.size + (constants.FEATURE_DIM + 3) * 4
    if len(raw) < _HEADER.size:
        raise FormatError(f"{source}: feature file is truncated")
    magic, version, dim = _HEADER.unpack_from(raw)
    if magic != constants.FEATURE_MAGIC:
        raise FormatError(f"{source}: not a feature vector file")
    if version != constants.FEATURE_VERSION:
        raise FormatError(f"{source}: unsupported feature file version {version}")
    if dim != constants.FEATURE_DIM:
        raise FormatError(
            f"{source}: feature dimension {dim}, expected {constants.FEATURE_DIM}"
        )
    if len(raw) != expected:
        raise FormatError(f"{source}: feature file has {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw, dtype="<f4", count=dim, offset=_HEADER.size).astype(np.float64)
    weights = np.frombuffer(raw, dtype="<f4", count=3, offset=_HEADER.size + dim * 4)
    try:
        group_weights = GroupWeights(*(float(value) for value in weights))
    except InputError as exc:
        raise FormatError(f"{source}: {exc}") from None
    scale = group_weights.expand()
    # a zero weight loses its group
    raw_values = np.divide(values, scale, out=np.zeros_like(values), where=scale > 0)
    try:
        return FeatureVector(raw_values, group_weights)
    except InputError as exc:
        raise FormatError(f"{source}: {exc}") from None


def write_feature_vector(path: str | os.PathLike[str], vector: FeatureVector) -> None:
    write_bytes(path, format_feature_vector(vector))


def read_feature_vector(path: str | os.PathLike[str]) -> FeatureVector:
    return parse_feature_vector(read_bytes(path), source=path)


def balanced_weights(
    raw_vectors: np.ndarray, w_global: float = 1.0, w_gender: float = 1.0
) -> GroupWeights:
    """
    Group weights where the FPFH block contributes as much variance as the global block.

    The local weight is chosen so that the summed per-component variance of the weighted
    FPFH block equals that of the weighted global lengths over `raw_vectors`.
    """
    raw_vectors = np.asarray(raw_vectors, dtype=np.float64).reshape(-1, constants.FEATURE_DIM)
    global_variance = float(raw_vectors[:, GLOBAL].var(axis=0).sum())
    local_variance = float(raw_vectors[:, LOCAL].var(axis=0).sum())
    if local_variance > 0 and global_variance > 0:
        w_local = float(np.sqrt(global_variance / local_variance)) * w_global
    else:
        w_local = 1.0
    return GroupWeights(w_global, w_gender, w_local)


@dataclass(frozen=True)
class GenderClassifier:
    """One-threshold decision stump over (ratio1, ratio2)."""

    feature: int
    threshold: float
    # gender predicted above the threshold
    above: Gender

    @classmethod
    def fit(cls, ratios: np.ndarray, labels: Sequence[Gender | str]) -> GenderClassifier:
        ratios = np.asarray(ratios, dtype=np.float64).reshape(-1, 2)
        genders = [Gender(label) for label in labels]
        if len(genders) != len(ratios) or not len(genders):
            raise InputError("need one label per ratio pair and at least one pair")
        is_female = np.array([gender is Gender.FEMALE for gender in genders])

        best: tuple[int, int, float, Gender] | None = None
        for feature in (0, 1):
            values = np.unique(ratios[:, feature])
            cuts = np.concatenate(
                ([values[0] - 1.0], (values[:-1] + values[1:]) / 2, [values[-1] + 1.0])
            )
            for cut in cuts:
                above = ratios[:, feature] > cut
                for gender, wanted in ((Gender.FEMALE, is_female), (Gender.MALE, ~is_female)):
                    correct = int(np.count_nonzero(above == wanted))
                    # first best wins: ratio1 before ratio2, lower cut first
                    if best is None or correct > best[0]:
                        best = (correct, feature, float(cut), gender)
        assert best is not None
        _, feature, threshold, gender = best
        return cls(feature, threshold, gender)

    def predict(self, ratios: np.ndarray) -> list[Gender]:
        ratios = np.asarray(ratios, dtype=np.float64).reshape(-1, 2)
        other = Gender.MALE if self.above is Gender.FEMALE else Gender.FEMALE
        return [
            self.above if value > self.threshold else other for value in ratios[:, self.feature]
        ]

    def accuracy(self, ratios: np.ndarray, labels: Sequence[Gender | str]) -> float:
        predicted = self.predict(ratios)
        if not predicted:
            return 0.0
        return sum(p is Gender(label) for p, label in zip(predicted, labels)) / len(predicted)
