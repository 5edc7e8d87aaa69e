from __future__ import annotations

import logging

import numpy as np
from scipy import ndimage

from .. import constants
from ..errors import InputError, NoSubject
from .wrappers import Contour2D, DepthFrame

log = logging.getLogger(__name__)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)

# clockwise on screen (rows grow downward), starting west
_OFFSETS = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_DIRECTION = {offset: index for index, offset in enumerate(_OFFSETS)}


def extract_silhouette_contour(
    frame: DepthFrame,
    depth_range: tuple[float, float] = (constants.SENSOR_MIN_DEPTH, constants.SENSOR_MAX_DEPTH),
    *,
    min_area: int = constants.MIN_SUBJECT_AREA,
) -> tuple[np.ndarray, Contour2D]:
    near, far = depth_range
    if not constants.SENSOR_MIN_DEPTH <= near < far <= constants.SENSOR_MAX_DEPTH:
        raise InputError(f"depth range {depth_range} is outside the sensor range")

    depth = frame.depth_m()
    in_range = frame.valid & (depth >= near) & (depth <= far)
    labels, count = ndimage.label(in_range, structure=_EIGHT_CONNECTED)
    if count == 0:
        raise NoSubject("no pixel lies within the depth range")
    areas = np.bincount(labels.ravel())[1:]
    # argmax picks the first label on ties, i.e. the component met first in raster order
    best = int(np.argmax(areas))
    if areas[best] < min_area:
        raise NoSubject(
            f"largest component covers {int(areas[best])} px, fewer than {min_area} px"
        )
    mask = labels == best + 1
    log.debug("Silhouette: %d component(s), kept %d px", count, int(areas[best]))
    return mask, trace_boundary(mask)


def trace_boundary(mask: np.ndarray) -> Contour2D:
    """
    Moore-neighbour boundary trace of the component holding the first set pixel in raster order.

    Tracing stops with Jacob's criterion: when the start pixel is entered again
    from the same backtrack direction it was first entered from.
    """
    padded = np.pad(np.asarray(mask, dtype=bool), 1)
    set_pixels = np.argwhere(padded)
    if len(set_pixels) == 0:
        raise NoSubject("mask is empty")

    start = (int(set_pixels[0][0]), int(set_pixels[0][1]))
    # the first pixel in raster order always has background to its west
    start_backtrack = 0
    current, backtrack = start, start_backtrack
    contour = [start]
    while True:
        for step in range(1, 9):
            direction = (backtrack + step) % 8
            row = current[0] + _OFFSETS[direction][0]
            col = current[1] + _OFFSETS[direction][1]
            if padded[row, col]:
                break
        else:
            # isolated pixel
            break

        previous = _OFFSETS[(direction - 1) % 8]
        background = (current[0] + previous[0], current[1] + previous[1])
        backtrack = _DIRECTION[(background[0] - row, background[1] - col)]
        current = (row, col)
        if current == start and backtrack == start_backtrack:
            break
        contour.append(current)

    return Contour2D(np.asarray(contour, dtype=np.int64) - 1)
