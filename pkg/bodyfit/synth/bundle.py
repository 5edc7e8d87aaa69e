from __future__ import annotations

import logging
import os
from collections.abc import Mapping, MutableMapping
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import cachetools
import numpy as np

from .. import constants
from ..anthropometrics import Measurements
from ..errors import FormatError, IoError
from ..geometry.io import read_skeleton, write_skeleton
from ..utils import read_json, write_json
from .body import BodyModel, build_mesh
from .demographics import BodyParams, DemographicTable, load_demographic_table, sample_population

log = logging.getLogger(__name__)

_bundle_cache: MutableMapping[str, BodyModel] = cachetools.LRUCache(maxsize=64)


def bundle_name(model_id: int) -> str:
    return constants.MODEL_DIR_FORMAT.format(model_id)


def format_obj(vertices: np.ndarray, faces: np.ndarray) -> str:
    lines = [f"# {constants.PROJECT_NAME} body mesh", "o body"]
    lines.extend(f"v {x!r} {y!r} {z!r}" for x, y, z in vertices.tolist())
    lines.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces.tolist())
    return "\n".join(lines) + "\n"


def parse_obj(text: str, *, source: object = "<obj>") -> tuple[np.ndarray, np.ndarray]:
    """Vertices and triangles of a Wavefront OBJ; polygons are fanned into triangles."""
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    for number, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                vertices.append([float(value) for value in parts[1:4]])
                if len(vertices[-1]) != 3:
                    raise ValueError("vertex needs three coordinates")
            elif parts[0] == "f":
                # "f v/vt/vn" keeps the vertex index only; negative indices count from the end
                indices = [int(part.split("/")[0]) for part in parts[1:]]
                indices = [
                    index - 1 if index > 0 else len(vertices) + index for index in indices
                ]
                if len(indices) < 3:
                    raise ValueError("face needs at least three vertices")
                for second in range(1, len(indices) - 1):
                    faces.append((indices[0], indices[second], indices[second + 1]))
        except ValueError as exc:
            raise FormatError(f"{source}:{number}: {exc}") from None

    vertex_array = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    face_array = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(face_array) and (face_array.min() < 0 or face_array.max() >= len(vertex_array)):
        raise FormatError(f"{source}: face refers to a missing vertex")
    return vertex_array, face_array


def export_model(model: BodyModel, directory: str | os.PathLike[str]) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / constants.MODEL_FILE).write_text(
            format_obj(model.vertices, model.faces), encoding="ascii"
        )
    except OSError as exc:
        raise IoError(directory, exc.strerror or str(exc)) from None
    write_skeleton(directory / constants.SKELETON_FILE, model.skeleton)
    write_json(
        directory / constants.RIG_FILE,
        {name: [float(c) for c in position] for name, position in model.rig.items()},
    )
    write_json(directory / constants.PARAMS_FILE, model.params.to_dict())
    write_json(directory / constants.TRUTH_FILE, model.truth.to_dict())
    return directory


def _read_object(path: Path) -> Mapping[str, object]:
    data = read_json(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return data


def import_model(directory: str | os.PathLike[str]) -> BodyModel:
    directory = Path(directory)
    if not directory.is_dir():
        raise IoError(directory, "not a model bundle directory")
    for name in (
        constants.MODEL_FILE,
        constants.SKELETON_FILE,
        constants.PARAMS_FILE,
        constants.TRUTH_FILE,
    ):
        if not (directory / name).is_file():
            raise FormatError(f"{directory}: bundle has no {name}")

    try:
        text = (directory / constants.MODEL_FILE).read_text(encoding="ascii")
    except UnicodeDecodeError:
        raise FormatError(f"{directory / constants.MODEL_FILE}: not an ASCII OBJ file") from None
    except OSError as exc:
        raise IoError(directory / constants.MODEL_FILE, exc.strerror or str(exc)) from None
    vertices, faces = parse_obj(text, source=directory / constants.MODEL_FILE)

    rig: dict[str, np.ndarray] = {}
    if (directory / constants.RIG_FILE).is_file():
        try:
            rig = {
                str(name): np.asarray(position, dtype=np.float64).reshape(3)
                for name, position in _read_object(directory / constants.RIG_FILE).items()
            }
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{directory / constants.RIG_FILE}: {exc}") from None

    truth = _read_object(directory / constants.TRUTH_FILE)
    return BodyModel(
        vertices=vertices,
        faces=faces,
        skeleton=read_skeleton(directory / constants.SKELETON_FILE),
        params=BodyParams.from_dict(_read_object(directory / constants.PARAMS_FILE)),
        truth=Measurements.from_dict(truth),  # type: ignore[arg-type]
        rig=rig,
    )


def load_model(directory: str | os.PathLike[str]) -> BodyModel:
    """`import_model` behind a small LRU cache keyed by the resolved bundle path."""
    key = str(Path(directory).resolve())
    try:
        return _bundle_cache[key]
    except KeyError:
        pass
    model = _bundle_cache[key] = import_model(directory)
    return model


def generate_dataset(
    out_dir: str | os.PathLike[str],
    count: int,
    seed: int,
    sd_scale: float | None = None,
    *,
    workers: int | None = None,
    table: DemographicTable | None = None,
) -> list[Path]:
    """
    Generate and export `count` bodies as `model_<id>` bundles under `out_dir`.

    The result does not depend on `workers`: every body is a pure function of its parameters,
    and those are drawn from per-model generators.
    """
    out_dir = Path(out_dir)
    population = sample_population(table or load_demographic_table(), count, seed, sd_scale)

    def generate(item: tuple[int, BodyParams]) -> Path:
        model_id, params = item
        path = export_model(build_mesh(params), out_dir / bundle_name(model_id))
        if (model_id + 1) % 100 == 0:
            log.info("Generated %d/%d bodies", model_id + 1, count)
        return path

    with ThreadPoolExecutor(max_workers=workers) as executor:
        paths = list(executor.map(generate, enumerate(population)))
    log.info("Generated %d bodies in %s", count, out_dir)
    return paths


def iter_bundles(dataset: str | os.PathLike[str]) -> list[tuple[int, Path]]:
    """(model id, bundle path) for every `model_<id>` directory of a dataset, by id."""
    dataset = Path(dataset)
    if not dataset.is_dir():
        raise IoError(dataset, "not a dataset directory")
    prefix = constants.MODEL_DIR_FORMAT.partition("{")[0]
    bundles = []
    for path in dataset.iterdir():
        suffix = path.name[len(prefix) :]
        if path.is_dir() and path.name.startswith(prefix) and suffix.isdigit():
            bundles.append((int(suffix), path))
    return sorted(bundles)
