from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .. import constants
from ..errors import FormatError, InputError


class JointId(str, enum.Enum):
    HE = "HE"
    NE = "NE"
    TO = "TO"
    LA = "LA"
    RA = "RA"
    LE = "LE"
    RE = "RE"
    LS = "LS"
    RS = "RS"
    LH = "LH"
    RH = "RH"
    LK = "LK"
    RK = "RK"
    LF = "LF"
    RF = "RF"


# fixed order used by every serialized layout
JOINT_ORDER: tuple[JointId, ...] = tuple(JointId)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    depth_unit: float = constants.DEPTH_UNIT

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise InputError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InputError("principal point must lie inside the image")
        if self.depth_unit <= 0:
            raise InputError("depth_unit must be positive")

    @classmethod
    def from_fov(
        cls, width: int, height: int, horizontal_fov: float, *, depth_unit: float = 0.001
    ) -> CameraIntrinsics:
        """Square-pixel intrinsics with the principal point at the image centre."""
        focal = (width / 2) / math.tan(math.radians(horizontal_fov / 2))
        return cls(
            fx=focal,
            fy=focal,
            cx=(width - 1) / 2,
            cy=(height - 1) / 2,
            width=width,
            height=height,
            depth_unit=depth_unit,
        )

    @classmethod
    def kinect_default(cls) -> CameraIntrinsics:
        return cls.from_fov(
            constants.SENSOR_WIDTH, constants.SENSOR_HEIGHT, constants.SENSOR_HORIZONTAL_FOV
        )

    @classmethod
    def portrait_default(cls) -> CameraIntrinsics:
        # same sensor turned on its side: the 57 degree field spans the 640 image rows
        return cls(
            fx=constants.SENSOR_FOCAL,
            fy=constants.SENSOR_FOCAL,
            cx=(constants.SENSOR_HEIGHT - 1) / 2,
            cy=(constants.SENSOR_WIDTH - 1) / 2,
            width=constants.SENSOR_HEIGHT,
            height=constants.SENSOR_WIDTH,
        )

    def to_dict(self) -> dict[str, float | int]:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "depth_unit": self.depth_unit,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, float | int]) -> CameraIntrinsics:
        return cls(
            fx=float(data["fx"]),
            fy=float(data["fy"]),
            cx=float(data["cx"]),
            cy=float(data["cy"]),
            width=int(data["width"]),
            height=int(data["height"]),
            depth_unit=float(data.get("depth_unit", constants.DEPTH_UNIT)),
        )


@dataclass(frozen=True, eq=False)
class DepthFrame:
    intrinsics: CameraIntrinsics
    # (height, width) uint16 millimetres, 0 = invalid
    data: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.intrinsics.height, self.intrinsics.width)
        if self.data.shape != shape:
            raise InputError(f"depth grid has shape {self.data.shape}, expected {shape}")
        if self.data.dtype != np.uint16:
            object.__setattr__(self, "data", self.data.astype(np.uint16))

    @property
    def valid(self) -> np.ndarray:
        return self.data > 0

    def depth_m(self) -> np.ndarray:
        return self.data.astype(np.float64) * self.intrinsics.depth_unit


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    normals: np.ndarray | None = None
    source_pixel: np.ndarray | None = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", points)
        for name in ("normals", "source_pixel"):
            value = getattr(self, name)
            if value is not None and len(value) != len(points):
                raise InputError(f"{name} has {len(value)} rows for {len(points)} points")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def normal_mask(self) -> np.ndarray:
        """Rows with a usable normal; degenerate ones carry NaN."""
        if self.normals is None:
            return np.zeros(len(self.points), dtype=bool)
        return np.isfinite(self.normals).all(axis=1)

    def with_normals(self, normals: np.ndarray) -> PointCloud:
        return PointCloud(self.points, normals, self.source_pixel)

    def subset(self, mask: np.ndarray) -> PointCloud:
        return PointCloud(
            self.points[mask],
            None if self.normals is None else self.normals[mask],
            None if self.source_pixel is None else self.source_pixel[mask],
        )

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> PointCloud:
        normals = None if self.normals is None else self.normals @ rotation.T
        return PointCloud(self.points @ rotation.T + translation, normals, self.source_pixel)


@dataclass(frozen=True, eq=False)
class Skeleton15:
    joints: Mapping[JointId, np.ndarray]
    confidence: Mapping[JointId, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        joints = {}
        for joint in JOINT_ORDER:
            try:
                position = np.asarray(self.joints[joint], dtype=np.float64).reshape(3)
            except KeyError:
                raise InputError(f"skeleton is missing joint {joint.value}") from None
            if not np.isfinite(position).all():
                raise InputError(f"joint {joint.value} has a non-finite position")
            joints[joint] = position
        object.__setattr__(self, "joints", joints)
        confidence = {joint: float(self.confidence.get(joint, 1.0)) for joint in JOINT_ORDER}
        object.__setattr__(self, "confidence", confidence)

    def __getitem__(self, joint: JointId) -> np.ndarray:
        return self.joints[joint]

    def as_array(self) -> np.ndarray:
        return np.stack([self.joints[joint] for joint in JOINT_ORDER])

    @classmethod
    def from_array(
        cls, positions: np.ndarray, confidence: Mapping[JointId, float] | None = None
    ) -> Skeleton15:
        return cls(dict(zip(JOINT_ORDER, np.asarray(positions))), confidence or {})

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> Skeleton15:
        return Skeleton15.from_array(self.as_array() @ rotation.T + translation, self.confidence)

    def to_dict(self) -> dict[str, object]:
        data: dict[str, object] = {
            joint.value: [float(c) for c in self.joints[joint]] for joint in JOINT_ORDER
        }
        data["confidence"] = {joint.value: self.confidence[joint] for joint in JOINT_ORDER}
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> Skeleton15:
        confidence = data.get("confidence", {})
        if not isinstance(confidence, Mapping):
            raise FormatError("skeleton confidence must be an object")
        joints = {}
        for joint in JOINT_ORDER:
            if joint.value not in data:
                raise FormatError(f"skeleton is missing joint {joint.value}")
            joints[joint] = np.asarray(data[joint.value], dtype=np.float64)
        return cls(joints, {JointId(key): float(value) for key, value in confidence.items()})


@dataclass(frozen=True, eq=False)
class Contour2D:
    # (n, 2) int array of (row, col), closed loop in tracing order
    pixels: np.ndarray

    def __len__(self) -> int:
        return len(self.pixels)
