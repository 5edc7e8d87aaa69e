from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np
import regex

from .. import constants
from ..errors import FormatError
from ..utils import read_bytes, read_json, write_bytes, write_json
from .wrappers import CameraIntrinsics, Contour2D, DepthFrame, PointCloud, Skeleton15

# P5 header: magic, width, height, maxval separated by whitespace and/or `#` comment lines,
# then exactly one whitespace byte before the raster
_SEPARATOR = rb"(?:\s|\#[^\n]*\n)+"
PGM_HEADER_RE = regex.compile(
    rb"\AP5"
    + _SEPARATOR
    + rb"(?P<width>\d+)"
    + _SEPARATOR
    + rb"(?P<height>\d+)"
    + _SEPARATOR
    + rb"(?P<maxval>\d+)\s"
)


def intrinsics_path_for(depth_path: str | os.PathLike[str]) -> Path:
    return Path(depth_path).with_suffix(".json")


def read_intrinsics(path: str | os.PathLike[str]) -> CameraIntrinsics:
    data = read_json(path)
    try:
        return CameraIntrinsics.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad intrinsics ({exc})") from None


def write_intrinsics(path: str | os.PathLike[str], intrinsics: CameraIntrinsics) -> None:
    write_json(path, intrinsics.to_dict())


def parse_pgm(raw: bytes, *, source: object = "<bytes>") -> np.ndarray:
    match = PGM_HEADER_RE.match(raw)
    if match is None:
        raise FormatError(f"{source}: not a binary PGM (P5) file")
    width, height, maxval = (int(match[name]) for name in ("width", "height", "maxval"))
    if not 0 < maxval <= 65535:
        raise FormatError(f"{source}: invalid maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    body = raw[match.end() :]
    expected = width * height * dtype.itemsize
    if len(body) < expected:
        raise FormatError(f"{source}: raster truncated ({len(body)} of {expected} bytes)")
    return np.frombuffer(body[:expected], dtype=dtype).reshape(height, width)


def format_pgm(data: np.ndarray, maxval: int) -> bytes:
    height, width = data.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    return header + np.ascontiguousarray(data, dtype=dtype).tobytes()


def read_depth_frame(
    path: str | os.PathLike[str],
    intrinsics: CameraIntrinsics | str | os.PathLike[str] | None = None,
) -> DepthFrame:
    """Read a 16-bit millimetre PGM; intrinsics default to the `.json` sidecar next to it."""
    if not isinstance(intrinsics, CameraIntrinsics):
        intrinsics = read_intrinsics(intrinsics or intrinsics_path_for(path))
    data = parse_pgm(read_bytes(path), source=path)
    if data.shape != (intrinsics.height, intrinsics.width):
        raise FormatError(
            f"{path}: raster is {data.shape[1]}x{data.shape[0]} but intrinsics say"
            f" {intrinsics.width}x{intrinsics.height}"
        )
    return DepthFrame(intrinsics, data.astype(np.uint16))


def write_depth_frame(path: str | os.PathLike[str], frame: DepthFrame) -> None:
    write_bytes(path, format_pgm(frame.data, 65535))
    write_intrinsics(intrinsics_path_for(path), frame.intrinsics)


def depth_preview(frame: DepthFrame) -> np.ndarray:
    """8-bit levels: 0 = invalid, 1..255 spread over the sensor range."""
    depth = frame.depth_m()
    span = constants.SENSOR_MAX_DEPTH - constants.SENSOR_MIN_DEPTH
    levels = np.rint((depth - constants.SENSOR_MIN_DEPTH) / span * (constants.PREVIEW_LEVELS - 1))
    levels = np.clip(levels, 0, constants.PREVIEW_LEVELS - 1) + 1
    return np.where(frame.valid, levels, 0).astype(np.uint8)


def write_preview_pgm(path: str | os.PathLike[str], frame: DepthFrame) -> None:
    write_bytes(path, format_pgm(depth_preview(frame), 255))


def read_skeleton(path: str | os.PathLike[str]) -> Skeleton15:
    data = read_json(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: skeleton must be a JSON object")
    try:
        return Skeleton15.from_dict(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad joint coordinates ({exc})") from None


def write_skeleton(path: str | os.PathLike[str], skeleton: Skeleton15) -> None:
    write_json(path, skeleton.to_dict())


def format_ply(cloud: PointCloud) -> str:
    """ASCII PLY of a cloud; normals are written when present, NaN where unusable."""
    properties = ["x", "y", "z"]
    columns = [cloud.points]
    if cloud.normals is not None:
        properties += ["nx", "ny", "nz"]
        columns.append(cloud.normals)
    lines = ["ply", "format ascii 1.0", f"element vertex {len(cloud)}"]
    lines.extend(f"property float {name}" for name in properties)
    lines.append("end_header")
    rows = np.hstack(columns)
    lines.extend(" ".join(f"{value:.6f}" for value in row) for row in rows.tolist())
    return "\n".join(lines) + "\n"


def write_point_cloud(path: str | os.PathLike[str], cloud: PointCloud) -> None:
    write_bytes(path, format_ply(cloud).encode("ascii"))


def write_contour_csv(path: str | os.PathLike[str], contour: Contour2D) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("row", "col"))
    writer.writerows(contour.pixels.tolist())
    write_bytes(path, buffer.getvalue().encode("ascii"))
