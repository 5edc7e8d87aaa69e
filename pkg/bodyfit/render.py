from __future__ import annotations

import enum
import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Literal, overload

import cachetools
import numpy as np

from . import constants
from .errors import FormatError, InputError, MissingSourceJoint, ModelOutOfFrustum
from .geometry import (
    JOINT_ORDER,
    CameraIntrinsics,
    DepthFrame,
    JointId,
    Skeleton15,
    project_many,
)
from .geometry.io import depth_preview
from .synth import BodyModel
from .utils import data_path, read_json

log = logging.getLogger(__name__)

# pixels per triangle batch when filling bounding boxes
_BATCH_SAMPLES = 1 << 20
_MIN_DEPTH = 1e-9


class View(str, enum.Enum):
    FRONTAL = "frontal"
    BACK = "back"


class Quantization(str, enum.Enum):
    MILLIMETRE = "16-bit"
    PREVIEW = "8-bit"


@dataclass(frozen=True)
class RenderConfig:
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics.portrait_default)
    # metres from the camera to the model's vertical axis
    camera_distance: float = constants.CAMERA_DISTANCE
    view: View = View.FRONTAL
    # millimetres
    noise_sd: float = 0.0
    quantization: Quantization = Quantization.MILLIMETRE
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "view", View(self.view))
        object.__setattr__(self, "quantization", Quantization(self.quantization))
        if not constants.SENSOR_MIN_DEPTH <= self.camera_distance <= constants.SENSOR_MAX_DEPTH:
            raise InputError(
                f"camera distance {self.camera_distance} m is outside the sensor range"
            )
        if self.noise_sd < 0:
            raise InputError("noise_sd must not be negative")


def model_to_camera(model: BodyModel, cfg: RenderConfig) -> tuple[np.ndarray, np.ndarray]:
    """Rotation and translation taking model coordinates to camera coordinates."""
    if cfg.view is View.FRONTAL:
        rotation = np.eye(3)
    else:
        # half turn about the vertical axis puts the camera behind the model
        rotation = np.diag([-1.0, 1.0, -1.0])
    translation = np.array([0.0, -model.params.height / 2, cfg.camera_distance])
    return rotation, translation


def _top_left(start: np.ndarray, end: np.ndarray) -> np.ndarray:
    # rows grow downward; with positive area the interior lies to the right of each edge
    dx = end[:, 0] - start[:, 0]
    dy = end[:, 1] - start[:, 1]
    return (dy < 0) | ((dy == 0) & (dx > 0))


def _edge(start: np.ndarray, end: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (end[:, 0, None] - start[:, 0, None]) * (y - start[:, 1, None]) - (
        end[:, 1, None] - start[:, 1, None]
    ) * (x - start[:, 0, None])


@overload
def rasterize_depth(
    vertices_cam: np.ndarray,
    faces: np.ndarray,
    intrinsics: CameraIntrinsics,
    with_face_ids: Literal[False] = ...,
) -> np.ndarray:
    ...


@overload
def rasterize_depth(
    vertices_cam: np.ndarray,
    faces: np.ndarray,
    intrinsics: CameraIntrinsics,
    with_face_ids: Literal[True],
) -> tuple[np.ndarray, np.ndarray]:
    ...


def rasterize_depth(
    vertices_cam: np.ndarray,
    faces: np.ndarray,
    intrinsics: CameraIntrinsics,
    with_face_ids: bool = False,
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """
    Z-buffer a camera-space triangle mesh.

    Pixel centres are sampled without anti-aliasing; shared edges follow the top-left rule so
    no pixel is drawn twice by two triangles of one surface. Depth is interpolated
    perspective-correctly (1/z is affine in screen space) and the nearest surface wins.
    Returns metric depth with NaN where nothing was drawn and, when asked, the index of
    the visible face (-1 where empty, lowest index on exact depth ties).
    """
    height, width = intrinsics.height, intrinsics.width
    vertices_cam = np.asarray(vertices_cam, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    zbuffer = np.full(height * width, np.inf)

    face_ids = np.arange(len(faces))
    in_front = (vertices_cam[faces, 2] > _MIN_DEPTH).all(axis=1)
    faces, face_ids = faces[in_front], face_ids[in_front]

    z = vertices_cam[:, 2]
    screen = np.zeros((len(vertices_cam), 2))
    visible = z > _MIN_DEPTH
    screen[visible] = project_many(vertices_cam[visible], intrinsics)

    p0, p1, p2 = (screen[faces[:, corner]] for corner in range(3))
    area = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (
        p2[:, 0] - p0[:, 0]
    )
    flipped = area < 0
    p1[flipped], p2[flipped] = p2[flipped].copy(), p1[flipped].copy()
    z0, z1, z2 = (z[faces[:, corner]] for corner in range(3))
    z1[flipped], z2[flipped] = z2[flipped].copy(), z1[flipped].copy()
    area = np.abs(area)

    corners = np.stack((p0, p1, p2))
    col_min = np.maximum(np.ceil(corners[..., 0].min(axis=0)), 0)
    col_max = np.minimum(np.floor(corners[..., 0].max(axis=0)), width - 1)
    row_min = np.maximum(np.ceil(corners[..., 1].min(axis=0)), 0)
    row_max = np.minimum(np.floor(corners[..., 1].max(axis=0)), height - 1)
    drawable = (area > 0) & (col_min <= col_max) & (row_min <= row_max)

    span = np.maximum(col_max - col_min, row_max - row_min) + 1
    # bucket by bounding box size so each batch fills a fixed square of sample offsets
    bucket = np.where(drawable, np.ceil(np.log2(np.maximum(span, 1))), -1).astype(np.int64)

    pixels, depths, owners = [], [], []
    for level in np.unique(bucket[bucket >= 0]):
        size = 1 << int(level)
        offsets_row, offsets_col = np.divmod(np.arange(size * size), size)
        members = np.flatnonzero(bucket == level)
        batch = max(1, _BATCH_SAMPLES // (size * size))
        for start in range(0, len(members), batch):
            chosen = members[start : start + batch]
            cols = col_min[chosen, None] + offsets_col[None, :]
            rows = row_min[chosen, None] + offsets_row[None, :]
            inside_box = (cols <= col_max[chosen, None]) & (rows <= row_max[chosen, None])

            a, b, c = p0[chosen], p1[chosen], p2[chosen]
            w0 = _edge(b, c, cols, rows)
            w1 = _edge(c, a, cols, rows)
            w2 = _edge(a, b, cols, rows)
            covered = inside_box
            for weight, (start_pt, end_pt) in zip((w0, w1, w2), ((b, c), (c, a), (a, b))):
                top_left = _top_left(start_pt, end_pt)[:, None]
                covered = covered & ((weight > 0) | ((weight == 0) & top_left))

            triangle, sample = np.nonzero(covered)
            if len(triangle) == 0:
                continue
            scale = area[chosen][triangle]
            inverse_depth = (
                w0[triangle, sample] / scale / z0[chosen][triangle]
                + w1[triangle, sample] / scale / z1[chosen][triangle]
                + w2[triangle, sample] / scale / z2[chosen][triangle]
            )
            pixels.append(
                rows[triangle, sample].astype(np.int64) * width
                + cols[triangle, sample].astype(np.int64)
            )
            depths.append(1.0 / inverse_depth)
            owners.append(face_ids[chosen][triangle])

    if pixels:
        pixel = np.concatenate(pixels)
        depth = np.concatenate(depths)
        np.minimum.at(zbuffer, pixel, depth)
    else:
        pixel = np.empty(0, dtype=np.int64)
        depth = np.empty(0)

    result = np.where(np.isfinite(zbuffer), zbuffer, np.nan).reshape(height, width)
    if not with_face_ids:
        return result

    face_buffer = np.full(height * width, np.iinfo(np.int64).max)
    if pixels:
        owner = np.concatenate(owners)
        winning = depth == zbuffer[pixel]
        np.minimum.at(face_buffer, pixel[winning], owner[winning])
    face_buffer[face_buffer == np.iinfo(np.int64).max] = -1
    return result, face_buffer.reshape(height, width)


def _quantize(depth: np.ndarray, intrinsics: CameraIntrinsics, cfg: RenderConfig) -> np.ndarray:
    drawn = np.isfinite(depth)
    metres = np.where(drawn, depth, 0.0)
    if cfg.noise_sd > 0:
        rng = np.random.default_rng(cfg.seed)
        noise = rng.normal(0.0, cfg.noise_sd / 1000, size=depth.shape)
        metres = np.where(drawn, metres + noise, 0.0)
    in_range = (
        drawn
        & (metres >= constants.SENSOR_MIN_DEPTH)
        & (metres <= constants.SENSOR_MAX_DEPTH)
    )
    units = np.where(in_range, np.rint(metres / intrinsics.depth_unit), 0)
    frame = DepthFrame(intrinsics, np.clip(units, 0, 65535).astype(np.uint16))
    if cfg.quantization is Quantization.MILLIMETRE:
        return frame.data

    # back to millimetres from one of the 255 preview levels
    levels = depth_preview(frame).astype(np.float64)
    span = constants.SENSOR_MAX_DEPTH - constants.SENSOR_MIN_DEPTH
    metres = constants.SENSOR_MIN_DEPTH + (levels - 1) / (constants.PREVIEW_LEVELS - 1) * span
    return np.where(levels > 0, np.rint(metres / intrinsics.depth_unit), 0).astype(np.uint16)


def render_depth(
    model: BodyModel, cfg: RenderConfig = RenderConfig(), mapping: JointMapping | None = None
) -> tuple[DepthFrame, Skeleton15]:
    """
    Depth frame of `model` seen by the configured camera, and its skeleton in camera space.

    Models carrying a rig get their skeleton remapped from it with `mapping` (the shipped
    mapping by default); others keep the skeleton stored with them.
    """
    intr = cfg.intrinsics
    rotation, translation = model_to_camera(model, cfg)
    vertices = model.vertices @ rotation.T + translation

    in_front = vertices[:, 2] > _MIN_DEPTH
    inside = np.zeros(len(vertices), dtype=bool)
    if in_front.any():
        pixels = project_many(vertices[in_front], intr)
        inside[in_front] = (
            (pixels[:, 0] >= -0.5)
            & (pixels[:, 0] < intr.width - 0.5)
            & (pixels[:, 1] >= -0.5)
            & (pixels[:, 1] < intr.height - 0.5)
        )
    if inside.sum() * 2 < len(vertices):
        raise ModelOutOfFrustum(
            f"only {int(inside.sum())} of {len(vertices)} vertices project inside the image"
        )

    depth = rasterize_depth(vertices, model.faces, intr)
    frame = DepthFrame(intr, _quantize(depth, intr, cfg))
    log.debug("Rendered %s view: %d valid pixels", cfg.view.value, int(frame.valid.sum()))
    skeleton = remap_skeleton(model.rig, mapping) if model.rig else model.skeleton
    return frame, skeleton.transformed(rotation, translation)


def project_joints(skeleton: Skeleton15, intrinsics: CameraIntrinsics) -> np.ndarray:
    """(15, 2) real-valued (col, row) pixels in joint order."""
    return project_many(skeleton.as_array(), intrinsics)


@dataclass(frozen=True)
class JointMapping:
    """Source joint names per target joint; several sources are averaged."""

    sources: Mapping[JointId, tuple[str, ...]]

    def __post_init__(self) -> None:
        sources = {}
        for joint in JOINT_ORDER:
            names = tuple(self.sources.get(joint, ()))
            if not names:
                raise FormatError(f"joint mapping does not cover {joint.value}")
            sources[joint] = names
        object.__setattr__(self, "sources", sources)

    @classmethod
    def identity(cls) -> JointMapping:
        return cls({joint: (joint.value,) for joint in JOINT_ORDER})

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> JointMapping:
        sources: dict[JointId, tuple[str, ...]] = {}
        for key, value in data.items():
            try:
                joint = JointId(key)
            except ValueError:
                raise FormatError(f"joint mapping names unknown target {key!r}") from None
            names = [value] if isinstance(value, str) else value
            if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
                raise FormatError(f"joint mapping for {key} must be a name or list of names")
            sources[joint] = tuple(names)
        return cls(sources)

    def to_dict(self) -> dict[str, list[str]]:
        return {joint.value: list(self.sources[joint]) for joint in JOINT_ORDER}


@cachetools.cached(cache=cachetools.LRUCache(maxsize=16))
def load_joint_mapping(path: str | os.PathLike[str] | None = None) -> JointMapping:
    data = read_json(path or data_path("joint_mapping.json"))
    if not isinstance(data, dict):
        raise FormatError(f"{path}: joint mapping must be a JSON object")
    return JointMapping.from_dict(data)


def remap_skeleton(
    named_joints: Mapping[str, np.ndarray], mapping: JointMapping | None = None
) -> Skeleton15:
    mapping = mapping or load_joint_mapping()
    joints = {}
    for joint in JOINT_ORDER:
        positions = []
        for name in mapping.sources[joint]:
            if name not in named_joints:
                raise MissingSourceJoint(name)
            positions.append(np.asarray(named_joints[name], dtype=np.float64))
        joints[joint] = np.mean(positions, axis=0)
    return Skeleton15(joints)
