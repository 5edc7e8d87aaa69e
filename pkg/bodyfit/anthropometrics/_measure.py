from __future__ import annotations

import contextlib
import logging
from collections.abc import Generator
from dataclasses import dataclass

import numpy as np

from .. import constants
from ..errors import BodyFitError
from ..geometry import (
    Contour2D,
    DepthFrame,
    PointCloud,
    Skeleton15,
    extract_silhouette_contour,
    unproject,
)
from ._axes import derived_joints, estimate_height, limb_lengths, principal_axes
from ._ellipse import ellipse_perimeter, fit_ellipse
from ._sections import cross_section_points
from .wrappers import GIRTH_NAMES, Measurements, PrincipalAxes, Tolerances

log = logging.getLogger(__name__)


@contextlib.contextmanager
def _measuring(name: str) -> Generator[None, None, None]:
    try:
        yield
    except BodyFitError as exc:
        if exc.measurement is None:
            exc.measurement = name
        raise


@dataclass(frozen=True, eq=False)
class Scan:
    """Intermediate products of a frontal measurement."""

    mask: np.ndarray
    contour: Contour2D
    cloud: PointCloud
    axes: PrincipalAxes


def measure_girths(
    cloud: PointCloud,
    sk: Skeleton15,
    axes: PrincipalAxes,
    tol: Tolerances = Tolerances(),
) -> dict[str, float]:
    """Girths in cm: full perimeter of the ellipse fitted to each frontal cross-section."""
    girths = {}
    for name, anchor in derived_joints(sk).items():
        with _measuring(name):
            section = cross_section_points(cloud, axes, anchor, tol)
            girths[name] = ellipse_perimeter(fit_ellipse(section)) * 100
    return girths


def measure_scan(
    frame: DepthFrame,
    sk: Skeleton15,
    tol: Tolerances = Tolerances(),
    *,
    depth_range: tuple[float, float] = (constants.SENSOR_MIN_DEPTH, constants.SENSOR_MAX_DEPTH),
    min_area: int = constants.MIN_SUBJECT_AREA,
) -> tuple[Measurements, Scan]:
    with _measuring("silhouette"):
        mask, contour = extract_silhouette_contour(frame, depth_range, min_area=min_area)
    with _measuring("posture"):
        axes = principal_axes(sk, tol)
    with _measuring("height"):
        height = estimate_height(contour, frame, sk, axes, tol)
    with _measuring("limb_lengths"):
        sleeve, leg, shoulder = limb_lengths(sk)
    cloud = unproject(frame, mask)
    girths = measure_girths(cloud, sk, axes, tol)

    measurements = Measurements(
        height=height,
        sleeve_length=sleeve,
        leg_length=leg,
        shoulder_length=shoulder,
        **{name: girths[name] for name in GIRTH_NAMES},
    )
    log.debug("Measured %s", measurements)
    return measurements, Scan(mask, contour, cloud, axes)


def measure_all(
    frame: DepthFrame, sk: Skeleton15, tol: Tolerances = Tolerances()
) -> Measurements:
    """All nine measurements of one frontal frame, or an error naming the one that failed."""
    return measure_scan(frame, sk, tol)[0]
