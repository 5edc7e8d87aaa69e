from __future__ import annotations

import functools
import logging
import os
import struct
from collections.abc import Iterable, Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

import numpy as np

from . import constants
from .errors import DimensionMismatch, DuplicateId, FormatError, InputError, IoError
from .features import FeatureVector, GroupWeights, balanced_weights
from .synth import BodyParams
from .utils import read_json, write_json

log = logging.getLogger(__name__)

# magic, version, count, dimension, three group weights
_HEADER = struct.Struct("<4sIII3f")
_RECORD = np.dtype([("id", "<u8"), ("vec", "<f4", (constants.FEATURE_DIM,))])

# rows scored per block by the float32 prefilter
_CHUNK_ROWS = 1 << 16
# float32 unit roundoff
_UNIT_ROUNDOFF = 2.0**-24
# forward error bound of a float32 dot product, one extra rounding for the stored result
_TERMS = constants.FEATURE_DIM + 1
_DOT_ERROR = _TERMS * _UNIT_ROUNDOFF / (1 - _TERMS * _UNIT_ROUNDOFF)

Query = Union[FeatureVector, np.ndarray]


def _float32_weights(weights: GroupWeights) -> GroupWeights:
    return GroupWeights(*(float(np.float32(w)) for w in weights.as_tuple()))


def _weigh(raw: np.ndarray, weights: GroupWeights) -> np.ndarray:
    """Weighted float32 vectors; shared by index build and queries so self-queries are exact."""
    scale = weights.expand().astype(np.float32)
    return np.asarray(raw, dtype=np.float32) * scale


def _exact_distances(rows: np.ndarray, q64: np.ndarray) -> np.ndarray:
    diff = rows.astype(np.float64) - q64
    return np.sqrt(np.add.reduce(diff * diff, axis=1))


@dataclass(frozen=True, eq=False)
class FeatureIndex:
    """
    Immutable id-sorted store of weighted float32 feature vectors.

    `vectors` already carry `weights`; queries are weighted the same way before comparing.
    """

    ids: np.ndarray
    vectors: np.ndarray
    weights: GroupWeights
    metadata_path: Path | None = None

    def __post_init__(self) -> None:
        ids = np.ascontiguousarray(self.ids, dtype=np.uint64).reshape(-1)
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[1] != constants.FEATURE_DIM:
            raise DimensionMismatch(
                f"index vectors have shape {vectors.shape}, expected (n, {constants.FEATURE_DIM})"
            )
        if len(ids) != len(vectors):
            raise InputError("index needs exactly one id per vector")
        if len(ids) > 1 and not (ids[1:] > ids[:-1]).all():
            raise InputError("index ids must be unique and sorted")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "vectors", vectors)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def nbytes(self) -> int:
        return int(self.ids.nbytes + self.vectors.nbytes)

    @functools.cached_property
    def _squared_norms(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.vectors, self.vectors, dtype=np.float64)

    @functools.cached_property
    def _norms(self) -> np.ndarray:
        return np.sqrt(self._squared_norms)

    def position(self, model_id: int) -> int:
        index = int(np.searchsorted(self.ids, np.uint64(model_id)))
        if index == len(self.ids) or int(self.ids[index]) != model_id:
            raise KeyError(model_id)
        return index

    def weigh(self, q: Query) -> np.ndarray:
        """The float32 query vector as stored entries would hold it."""
        raw = q.raw if isinstance(q, FeatureVector) else np.asarray(q, dtype=np.float64)
        raw = raw.reshape(-1)
        if len(raw) != self.dim:
            raise DimensionMismatch(f"query has {len(raw)} values, index holds {self.dim}")
        return _weigh(raw, self.weights)


@dataclass(frozen=True)
class QueryResult:
    ids: tuple[int, ...]
    distances: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.ids, self.distances))

    @property
    def top(self) -> tuple[int, float]:
        return self.ids[0], self.distances[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "neighbors": [
                {"id": model_id, "distance": distance} for model_id, distance in self
            ]
        }


def _ranked(ids: np.ndarray, distances: np.ndarray, k: int) -> QueryResult:
    order = np.lexsort((ids, distances))[:k]
    return QueryResult(
        tuple(int(model_id) for model_id in ids[order]),
        tuple(float(distance) for distance in distances[order]),
    )


def _check_k(index: FeatureIndex, k: int) -> None:
    if not 1 <= k <= len(index):
        raise InputError(f"k must be between 1 and the index size {len(index)}, got {k}")


def build_index(
    entries: Iterable[tuple[int, Query]],
    weights: GroupWeights | None = None,
    *,
    metadata_path: str | os.PathLike[str] | None = None,
) -> FeatureIndex:
    """
    Index of (id, unweighted features) pairs.

    Without explicit `weights` the FPFH block is balanced against the global lengths over the
    given vectors. Input order does not matter: entries are stored by ascending id.
    """
    ids: list[int] = []
    rows: list[np.ndarray] = []
    for model_id, vector in entries:
        raw = vector.raw if isinstance(vector, FeatureVector) else np.asarray(vector, np.float64)
        raw = raw.reshape(-1)
        if len(raw) != constants.FEATURE_DIM:
            raise DimensionMismatch(
                f"entry {model_id} has {len(raw)} values, expected {constants.FEATURE_DIM}"
            )
        if model_id < 0:
            raise InputError(f"entry id {model_id} is negative")
        ids.append(int(model_id))
        rows.append(raw)
    if not ids:
        raise InputError("cannot build an index without entries")

    order = np.argsort(np.asarray(ids, dtype=np.int64), kind="stable")
    sorted_ids = np.asarray(ids, dtype=np.uint64)[order]
    duplicated = sorted_ids[1:][sorted_ids[1:] == sorted_ids[:-1]]
    if len(duplicated):
        raise DuplicateId(f"entry id {int(duplicated[0])} appears more than once")

    raw_matrix = np.stack(rows)[order]
    if weights is None:
        weights = balanced_weights(raw_matrix)
    weights = _float32_weights(weights)
    index = FeatureIndex(
        sorted_ids,
        _weigh(raw_matrix, weights),
        weights,
        Path(metadata_path) if metadata_path is not None else None,
    )
    log.info(
        "Built index of %d vectors (%.1f MB), weights %s",
        len(index),
        index.nbytes / 1e6,
        weights.as_tuple(),
    )
    return index


def brute_force_query(index: FeatureIndex, q: Query, k: int) -> QueryResult:
    """Reference scan: exact distance to every entry."""
    _check_k(index, k)
    q64 = index.weigh(q).astype(np.float64)
    return _ranked(index.ids, _exact_distances(index.vectors, q64), k)


def knn_query(index: FeatureIndex, q: Query, k: int) -> QueryResult:
    """
    Exact k nearest neighbours by L2 distance, ties broken by ascending id.

    A float32 matrix-vector pass bounds every squared distance from both sides; only rows whose
    lower bound can still reach the k-th smallest upper bound are re-scored exactly, the same
    way `brute_force_query` scores every row.
    """
    _check_k(index, k)
    q32 = index.weigh(q)
    q64 = q32.astype(np.float64)
    q_squared = float(q64 @ q64)
    q_norm = np.sqrt(q_squared)

    lower = np.empty(len(index))
    upper = np.empty(len(index))
    for start in range(0, len(index), _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, len(index))
        dot = (index.vectors[start:stop] @ q32).astype(np.float64)
        squared = index._squared_norms[start:stop]
        approx = squared - 2 * dot + q_squared
        margin = 2 * _DOT_ERROR * index._norms[start:stop] * q_norm
        margin += 1e-12 * (squared + q_squared) + 1e-30
        lower[start:stop] = approx - margin
        upper[start:stop] = approx + margin

    threshold = np.partition(upper, k - 1)[k - 1]
    candidates = np.flatnonzero(lower <= threshold)
    distances = _exact_distances(index.vectors[candidates], q64)
    return _ranked(index.ids[candidates], distances, k)


def query_many(
    index: FeatureIndex,
    queries: Sequence[Query],
    k: int,
    *,
    workers: int | None = None,
) -> list[QueryResult]:
    """`knn_query` for every query on a thread pool; results come back in query order."""
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda q: knn_query(index, q, k), queries))


def metadata_path_for(path: str | os.PathLike[str]) -> Path:
    return Path(f"{os.fspath(path)}.json")


def save_index(index: FeatureIndex, path: str | os.PathLike[str]) -> None:
    header = _HEADER.pack(
        constants.INDEX_MAGIC,
        constants.INDEX_VERSION,
        len(index),
        index.dim,
        *index.weights.as_tuple(),
    )
    records = np.empty(len(index), dtype=_RECORD)
    records["id"] = index.ids
    records["vec"] = index.vectors
    try:
        with open(path, "wb") as fp:
            fp.write(header)
            fp.write(records.tobytes())
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None
    log.info("Saved index of %d vectors to %s", len(index), path)


def load_index(path: str | os.PathLike[str]) -> FeatureIndex:
    """Read an index file; records are mapped from disk and copied into one contiguous block."""
    try:
        size = os.path.getsize(path)
        with open(path, "rb") as fp:
            header = fp.read(_HEADER.size)
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None
    if len(header) < _HEADER.size:
        raise FormatError(f"{path}: index file is truncated")
    magic, version, count, dim, *weights = _HEADER.unpack(header)
    if magic != constants.INDEX_MAGIC:
        raise FormatError(f"{path}: not an index file")
    if version != constants.INDEX_VERSION:
        raise FormatError(f"{path}: unsupported index version {version}")
    if dim != constants.FEATURE_DIM:
        raise FormatError(f"{path}: index dimension {dim}, expected {constants.FEATURE_DIM}")
    expected = _HEADER.size + count * _RECORD.itemsize
    if size != expected:
        raise FormatError(f"{path}: index file has {size} bytes, expected {expected}")
    if count == 0:
        raise FormatError(f"{path}: index is empty")
    try:
        group_weights = GroupWeights(*weights)
    except InputError as exc:
        raise FormatError(f"{path}: {exc}") from None

    try:
        records = np.memmap(path, dtype=_RECORD, mode="r", offset=_HEADER.size, shape=(count,))
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None
    ids = np.array(records["id"])
    vectors = np.ascontiguousarray(records["vec"])
    del records
    if count > 1 and not (ids[1:] > ids[:-1]).all():
        raise FormatError(f"{path}: index ids are not strictly increasing")

    metadata = metadata_path_for(path)
    return FeatureIndex(
        ids, vectors, group_weights, metadata if metadata.is_file() else None
    )


@dataclass(frozen=True)
class IndexedModel:
    bundle: Path
    params: BodyParams


def write_metadata(
    path: str | os.PathLike[str], entries: Mapping[int, IndexedModel]
) -> None:
    write_json(
        path,
        {
            "entries": {
                str(model_id): {"bundle": str(entry.bundle), "params": entry.params.to_dict()}
                for model_id, entry in sorted(entries.items())
            }
        },
    )


def read_metadata(path: str | os.PathLike[str]) -> dict[int, IndexedModel]:
    data = read_json(path)
    try:
        entries = data["entries"]
        return {
            int(model_id): IndexedModel(
                Path(entry["bundle"]), BodyParams.from_dict(entry["params"])
            )
            for model_id, entry in entries.items()
        }
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise FormatError(f"{path}: invalid index metadata ({exc!r})") from None
