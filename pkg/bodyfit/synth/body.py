from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..anthropometrics import Measurements, derived_joints, elliptic_perimeter, limb_lengths
from ..geometry import JointId, PointCloud, Skeleton15
from ..utils import rng_for
from .demographics import BodyParams, Gender

log = logging.getLogger(__name__)

SEGMENTS = 64
REFERENCE_BMI = 22.5
GIRTH_LIMITS = (0.75, 1.6)

# trunk, neck and head: (region, height, half-width, half-depth) as fractions of stature
# for a male body with a girth multiplier of 1; repeated rows make flat plateaus
_TRUNK_PROFILE = (
    ("crotch", 0.460, 0.095, 0.068),
    ("hip", 0.515, 0.103, 0.072),
    ("hip", 0.545, 0.103, 0.072),
    ("waist", 0.585, 0.085, 0.060),
    ("waist", 0.615, 0.085, 0.060),
    ("chest", 0.725, 0.098, 0.070),
    ("chest", 0.755, 0.098, 0.070),
    ("shoulder", 0.800, 0.112, 0.062),
    ("trapezius", 0.845, 0.070, 0.045),
    ("trapezius", 0.870, 0.070, 0.045),
    ("neck", 0.895, 0.033, 0.033),
    ("neck", 0.925, 0.033, 0.033),
    ("head", 0.950, 0.045, 0.055),
    ("head", 0.975, 0.042, 0.050),
    ("head", 0.993, 0.024, 0.030),
)
# (half-width, half-depth) multipliers
_FEMALE_PROFILE = {
    "hip": (1.08, 1.05),
    "waist": (0.92, 1.0),
    "chest": (0.95, 1.10),
    "shoulder": (0.88, 1.12),
    "trapezius": (0.90, 1.05),
    "neck": (0.88, 0.88),
}

CROTCH = 0.46
HIP = 0.53
TORSO = 0.60
SHOULDER = 0.80
NECK = 0.88
HEAD = 0.955
KNEE = 0.285
FOOT = 0.04
FOOT_OFFSET = 0.04

UPPER_ARM = 0.16
FOREARM = 0.14
HAND = 0.10
HAND_CENTRE = 0.04
WRIST = UPPER_ARM + FOREARM

# arm radius along the arm, (distance from the shoulder joint, radius) / stature
_ARM_PROFILE = (
    (0.00, 0.025),
    (0.08, 0.022),
    (0.16, 0.018),
    (0.23, 0.017),
    (0.30, 0.013),
    (0.34, 0.016),
    (0.38, 0.013),
    (0.40, 0.008),
)
# leg radius as a fraction of the thigh radius, keyed by height / stature
_LEG_PROFILE = (
    (0.000, 0.40),
    (0.060, 0.36),
    (0.200, 0.62),
    (0.285, 0.58),
    (0.460, 0.93),
    (0.530, 1.00),
)

RIG_NAMES = (
    "root",
    "pelvis.L",
    "pelvis.R",
    "spine01",
    "spine02",
    "spine03",
    "spine04",
    "spine05",
    "neck01",
    "neck02",
    "head",
    "head_end",
    *(
        f"{bone}.{side}"
        for side in ("L", "R")
        for bone in (
            "clavicle",
            "upperarm",
            "lowerarm",
            "wrist",
            "hand",
            "fingers",
            "thigh",
            "shin",
            "foot",
            "toe",
        )
    ),
)


@dataclass(frozen=True, eq=False)
class BodyModel:
    # (n, 3) metres, y up, feet on y = 0, facing -z
    vertices: np.ndarray
    # (m, 3) vertex indices, counter-clockwise seen from outside
    faces: np.ndarray
    skeleton: Skeleton15
    params: BodyParams
    truth: Measurements
    rig: Mapping[str, np.ndarray] = field(default_factory=dict)


def girth_multiplier(params: BodyParams) -> float:
    low, high = GIRTH_LIMITS
    return float(np.clip(math.sqrt(params.bmi / REFERENCE_BMI), low, high))


class TrunkProfile:
    """Half-width and half-depth of the trunk, neck and head as smooth functions of height."""

    def __init__(self, params: BodyParams) -> None:
        self.stature = params.height
        girth = girth_multiplier(params)
        levels, widths, depths = [], [], []
        for region, level, width, depth in _TRUNK_PROFILE:
            # heads do not grow with weight the way bodies do
            scale = math.sqrt(girth) if region == "head" else girth
            width_scale, depth_scale = (1.0, 1.0)
            if params.gender is Gender.FEMALE:
                width_scale, depth_scale = _FEMALE_PROFILE.get(region, (1.0, 1.0))
            levels.append(level)
            widths.append(width * scale * width_scale)
            depths.append(depth * scale * depth_scale)
        levels.append(1.0)
        widths.append(0.0)
        depths.append(0.0)
        self.levels = np.array(levels)
        self._width = PchipInterpolator(self.levels, widths)
        self._depth = PchipInterpolator(self.levels, depths)

    def half_axes(self, y: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(half-width, half-depth) in metres at height `y` metres."""
        fraction = np.asarray(y, dtype=np.float64) / self.stature
        return self._width(fraction) * self.stature, self._depth(fraction) * self.stature

    def ring_levels(self) -> np.ndarray:
        grid = np.arange(CROTCH, 0.995, 0.005)
        return np.unique(np.round(np.concatenate((grid, self.levels[:-1])), 9))


def _generalized_cylinder(
    centres: np.ndarray,
    half_a: np.ndarray,
    half_b: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
    *,
    end_point: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Closed tube through elliptical rings `centres[i] + a cos(t) e1 + b sin(t) e2`.

    `e2 x e1` must point from the first ring towards the last one so faces wind outwards.
    Both ends are closed by triangle fans, the last one around `end_point` when given.
    """
    angles = np.linspace(0, 2 * math.pi, SEGMENTS, endpoint=False)
    rings = (
        centres[:, None, :]
        + half_a[:, None, None] * np.cos(angles)[None, :, None] * e1
        + half_b[:, None, None] * np.sin(angles)[None, :, None] * e2
    )
    count = len(centres)
    vertices = np.concatenate(
        (
            rings.reshape(-1, 3),
            centres[:1],
            (centres[-1:] if end_point is None else end_point.reshape(1, 3)),
        )
    )

    ring = np.arange(count - 1)[:, None] * SEGMENTS
    k = np.arange(SEGMENTS)[None, :]
    k_next = (k + 1) % SEGMENTS
    here, up = ring + k, ring + SEGMENTS + k
    here_next, up_next = ring + k_next, ring + SEGMENTS + k_next
    sides = np.concatenate(
        (
            np.stack((here, up, here_next), axis=-1).reshape(-1, 3),
            np.stack((here_next, up, up_next), axis=-1).reshape(-1, 3),
        )
    )
    start, end = count * SEGMENTS, count * SEGMENTS + 1
    first = np.arange(SEGMENTS)
    last = (count - 1) * SEGMENTS + first
    caps = np.concatenate(
        (
            np.column_stack((np.full(SEGMENTS, start), first, np.roll(first, -1))),
            np.column_stack((np.full(SEGMENTS, end), np.roll(last, -1), last)),
        )
    )
    return vertices, np.concatenate((sides, caps))


_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


def _arm(
    side: float, shoulder: np.ndarray, stature: float, girth: float
) -> tuple[np.ndarray, np.ndarray]:
    distances, radii = np.array(_ARM_PROFILE).T
    along = np.linspace(0.0, distances[-1], 41)
    radius = PchipInterpolator(distances, radii)(along) * stature * math.sqrt(girth)
    centres = shoulder + np.outer(along * stature * side, _X)
    # e2 x e1 has to point along the arm
    e1, e2 = (_Z, _Y) if side > 0 else (_Y, _Z)
    return _generalized_cylinder(centres, radius, radius, e1, e2)


def _leg(
    hip: np.ndarray, foot_x: float, stature: float, thigh_radius: float
) -> tuple[np.ndarray, np.ndarray]:
    levels, factors = np.array(_LEG_PROFILE).T
    heights = np.linspace(HIP, 0.0, 54)
    radius = PchipInterpolator(levels, factors)(heights) * thigh_radius
    centres = np.column_stack(
        (
            foot_x + (hip[0] - foot_x) * heights / HIP,
            heights * stature,
            np.zeros_like(heights),
        )
    )
    return _generalized_cylinder(centres, radius, radius, _X, -_Z)


def _along_arm(shoulder: np.ndarray, side: float, distance: float, stature: float) -> np.ndarray:
    return shoulder + side * distance * stature * _X


def _on_leg(hip: np.ndarray, foot_x: float, fraction: float, stature: float) -> np.ndarray:
    x = foot_x + (hip[0] - foot_x) * fraction / HIP
    return np.array([x, fraction * stature, 0.0])


def build_mesh(params: BodyParams) -> BodyModel:
    """Procedural T-pose body for `params`, with its skeleton, rig and analytic measurements."""
    stature = params.height
    girth = girth_multiplier(params)
    trunk = TrunkProfile(params)

    levels = trunk.ring_levels()
    widths, depths = trunk.half_axes(levels * stature)
    centres = np.outer(levels * stature, _Y)
    parts = [
        _generalized_cylinder(centres, widths, depths, _X, _Z, end_point=stature * _Y),
    ]

    hip_width, hip_depth = (float(value) for value in trunk.half_axes(HIP * stature))
    shoulder_width = float(trunk.half_axes(SHOULDER * stature)[0])
    shoulder_x = 0.8 * shoulder_width
    hip_x = 0.5 * hip_width
    foot_x = FOOT_OFFSET * stature
    thigh_radius = min(0.45 * hip_width, 0.8 * hip_depth)

    rig: dict[str, np.ndarray] = {}
    for side, suffix in ((-1.0, "L"), (1.0, "R")):
        shoulder = np.array([side * shoulder_x, SHOULDER * stature, 0.0])
        hip = np.array([side * hip_x, HIP * stature, 0.0])
        parts.append(_arm(side, shoulder, stature, girth))
        parts.append(_leg(hip, side * foot_x, stature, thigh_radius))

        rig[f"clavicle.{suffix}"] = np.array([side * 0.5 * shoulder_x, NECK * stature, 0.0])
        rig[f"upperarm.{suffix}"] = shoulder
        rig[f"lowerarm.{suffix}"] = _along_arm(shoulder, side, UPPER_ARM, stature)
        rig[f"wrist.{suffix}"] = _along_arm(shoulder, side, WRIST, stature)
        rig[f"hand.{suffix}"] = _along_arm(shoulder, side, WRIST + HAND_CENTRE, stature)
        rig[f"fingers.{suffix}"] = _along_arm(shoulder, side, WRIST + 0.8 * HAND, stature)
        rig[f"pelvis.{suffix}"] = np.array([side * 0.5 * hip_x, 0.56 * stature, 0.0])
        rig[f"thigh.{suffix}"] = hip
        rig[f"shin.{suffix}"] = _on_leg(hip, side * foot_x, KNEE, stature)
        rig[f"foot.{suffix}"] = _on_leg(hip, side * foot_x, FOOT, stature)
        toe = _on_leg(hip, side * foot_x, 0.0, stature)
        rig[f"toe.{suffix}"] = toe - 2 * thigh_radius * _Z

    for name, fraction in (
        ("root", HIP),
        ("spine01", 0.56),
        ("spine02", TORSO),
        ("spine03", 0.67),
        ("spine04", 0.74),
        ("spine05", SHOULDER),
        ("neck01", NECK),
        ("neck02", 0.91),
        ("head", HEAD),
        ("head_end", 1.0),
    ):
        rig[name] = fraction * stature * _Y
    rig = {name: rig[name] for name in RIG_NAMES}

    skeleton = Skeleton15(
        {
            JointId.HE: rig["head"],
            JointId.NE: (rig["clavicle.L"] + rig["clavicle.R"]) / 2,
            JointId.TO: rig["spine02"],
            JointId.LA: rig["hand.L"],
            JointId.RA: rig["hand.R"],
            JointId.LE: rig["lowerarm.L"],
            JointId.RE: rig["lowerarm.R"],
            JointId.LS: rig["upperarm.L"],
            JointId.RS: rig["upperarm.R"],
            JointId.LH: rig["thigh.L"],
            JointId.RH: rig["thigh.R"],
            JointId.LK: rig["shin.L"],
            JointId.RK: rig["shin.R"],
            JointId.LF: rig["foot.L"],
            JointId.RF: rig["foot.R"],
        }
    )

    vertices, faces, offset = [], [], 0
    for part_vertices, part_faces in parts:
        vertices.append(part_vertices)
        faces.append(part_faces + offset)
        offset += len(part_vertices)

    model = BodyModel(
        vertices=np.concatenate(vertices),
        faces=np.concatenate(faces).astype(np.int64),
        skeleton=skeleton,
        params=params,
        truth=_truth(params, skeleton, trunk),
        rig=rig,
    )
    log.debug("Built body %s: %d vertices", params, len(model.vertices))
    return model


def _truth(params: BodyParams, skeleton: Skeleton15, trunk: TrunkProfile) -> Measurements:
    sleeve, leg, shoulder = limb_lengths(skeleton)
    girths = {}
    for name, anchor in derived_joints(skeleton).items():
        width, depth = trunk.half_axes(anchor[1])
        girths[name] = elliptic_perimeter(float(width), float(depth)) * 100
    return Measurements(
        height=params.height * 100,
        sleeve_length=sleeve,
        leg_length=leg,
        shoulder_length=shoulder,
        **girths,
    )


def ground_truth_measurements(model: BodyModel) -> Measurements:
    return model.truth


def sample_surface(model: BodyModel, n: int, seed: int = 0) -> PointCloud:
    """`n` points spread uniformly over the mesh area, with the normal of their face."""
    triangles = model.vertices[model.faces]
    cross = np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0])
    doubled_area = np.linalg.norm(cross, axis=1)
    usable = doubled_area > 0
    triangles, cross, doubled_area = triangles[usable], cross[usable], doubled_area[usable]

    rng = rng_for(seed)
    chosen = rng.choice(len(triangles), size=n, p=doubled_area / doubled_area.sum())
    root = np.sqrt(rng.random(n))[:, None]
    second = rng.random(n)[:, None]
    corners = triangles[chosen]
    points = (
        (1 - root) * corners[:, 0]
        + root * (1 - second) * corners[:, 1]
        + root * second * corners[:, 2]
    )
    normals = cross[chosen] / doubled_area[chosen, None]
    return PointCloud(points, normals)
