from __future__ import annotations

import numpy as np

from ..errors import DegenerateSkeleton, InsufficientContour, PostureError
from ..geometry import Contour2D, DepthFrame, JointId, Skeleton15, project, unproject_pixel
from .wrappers import PrincipalAxes, Tolerances

_TINY = 1e-9


def _unit(vector: np.ndarray, what: str) -> np.ndarray:
    length = float(np.linalg.norm(vector))
    if length < _TINY:
        raise DegenerateSkeleton(f"{what} has zero length")
    return vector / length


def principal_axes(sk: Skeleton15, tol: Tolerances = Tolerances()) -> PrincipalAxes:
    u = _unit(sk[JointId.TO] - sk[JointId.NE], "neck-torso segment")
    shoulders = _unit(sk[JointId.RS] - sk[JointId.LS], "shoulder line")
    v = shoulders - shoulders.dot(u) * u
    v = _unit(v, "shoulder line orthogonal to the spine")
    w = np.cross(u, v)

    hips = (sk[JointId.LH] + sk[JointId.RH]) / 2
    d = _unit(hips - sk[JointId.TO], "torso-hip segment")
    if tol.literal_verticality:
        upright = float(u.dot(d)) < tol.eps1
    else:
        upright = float(np.linalg.norm(np.cross(u, d))) < tol.eps1
    if not upright:
        raise PostureError("posture is not vertical enough to measure")
    return PrincipalAxes(u, v, w)


def estimate_height(
    contour: Contour2D,
    frame: DepthFrame,
    sk: Skeleton15,
    axes: PrincipalAxes,
    tol: Tolerances = Tolerances(),
) -> float:
    """Stature in cm from the highest and lowest silhouette points near the body axis."""
    if len(contour) == 0:
        raise InsufficientContour("contour is empty")
    intr = frame.intrinsics
    torso = sk[JointId.TO]
    origin = project(torso, intr)
    along = project(torso + 0.1 * axes.u, intr) - origin
    across = project(torso + 0.1 * axes.v, intr) - origin
    along /= np.linalg.norm(along)
    across -= across.dot(along) * along
    across /= np.linalg.norm(across)

    pixels = contour.pixels
    offsets = pixels[:, ::-1].astype(np.float64) - origin
    distance = np.linalg.norm(offsets, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        lateral = np.abs(offsets @ across) / distance
    keep = (distance > 0) & (lateral < tol.eps2)
    if np.count_nonzero(keep) < 2:
        raise InsufficientContour("fewer than two contour points lie near the body axis")

    selected, ratios = pixels[keep], lateral[keep]
    # within a row prefer the point closest to the axis
    order = np.lexsort((ratios, selected[:, 0]))
    top = selected[order[0]]
    bottom_row = selected[:, 0] == selected[:, 0].max()
    bottom = selected[bottom_row][np.argmin(ratios[bottom_row])]

    ends = []
    for row, col in (top, bottom):
        z = float(frame.data[row, col]) * intr.depth_unit
        if z <= 0:
            raise InsufficientContour(f"contour pixel ({row}, {col}) has no depth")
        ends.append(unproject_pixel(row, col, z, intr))
    return float(np.linalg.norm(ends[0] - ends[1])) * 100


def limb_lengths(sk: Skeleton15) -> tuple[float, float, float]:
    """Sleeve, leg and shoulder lengths in cm."""

    def path(*joints: JointId) -> float:
        points = np.stack([sk[joint] for joint in joints])
        return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())

    sleeve = (
        path(JointId.LA, JointId.LE, JointId.LS, JointId.NE)
        + path(JointId.RA, JointId.RE, JointId.RS, JointId.NE)
    ) / 2
    leg = (path(JointId.LH, JointId.LK, JointId.LF) + path(JointId.RH, JointId.RK, JointId.RF)) / 2
    shoulder = float(np.linalg.norm(sk[JointId.LS] - sk[JointId.RS]))
    if min(sleeve, leg, shoulder) < _TINY:
        raise DegenerateSkeleton("a limb path has zero length")
    return sleeve * 100, leg * 100, shoulder * 100


def derived_joints(sk: Skeleton15) -> dict[str, np.ndarray]:
    """Cross-section anchors keyed by the girth they measure."""
    neck = (sk[JointId.NE] + sk[JointId.HE]) / 2
    shoulders = (sk[JointId.LS] + sk[JointId.RS]) / 2
    return {
        "girth_neck": neck,
        "girth_shoulder": (neck + shoulders) / 2,
        "girth_chest": (sk[JointId.NE] + sk[JointId.TO]) / 2,
        "girth_waist": sk[JointId.TO].copy(),
        "girth_hip": (sk[JointId.LH] + sk[JointId.RH]) / 2,
    }
