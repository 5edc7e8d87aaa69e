from __future__ import annotations

import numpy as np
import pytest

from bodyfit import constants
from bodyfit.errors import DimensionMismatch, DuplicateId, FormatError, InputError, IoError
from bodyfit.features import LOCAL, FeatureVector, GroupWeights
from bodyfit.retrieval import (
    FeatureIndex,
    IndexedModel,
    brute_force_query,
    build_index,
    knn_query,
    load_index,
    metadata_path_for,
    query_many,
    read_metadata,
    save_index,
    write_metadata,
)
from bodyfit.synth import BodyParams, Gender

DIM = constants.FEATURE_DIM


def _random_index(rng, count, weights=GroupWeights()):
    ids = rng.choice(10 * count, size=count, replace=False)
    vectors = rng.normal(size=(count, DIM))
    return build_index(zip(ids.tolist(), vectors), weights), ids, vectors


def test_self_query_is_exact(rng):
    index, ids, vectors = _random_index(rng, 200)
    for model_id, vector in zip(ids[:20], vectors[:20]):
        result = knn_query(index, vector, 1)
        assert result.top == (int(model_id), 0.0)


def test_matches_brute_force(rng):
    for count in (1, 7, 300):
        index, _, _ = _random_index(rng, count, GroupWeights(1.0, 2.0, 0.3))
        for _ in range(10):
            query = rng.normal(size=DIM)
            k = int(rng.integers(1, count + 1))
            assert knn_query(index, query, k) == brute_force_query(index, query, k)


def test_thousand_entries_match_brute_force(rng):
    index, _, _ = _random_index(rng, 1000)
    for _ in range(100):
        query = rng.normal(size=DIM)
        assert knn_query(index, query, 10) == brute_force_query(index, query, 10)


def _queries(rng, vectors, count):
    """Random points, stored rows and points next to stored rows."""
    for trial in range(count):
        row = vectors[int(rng.integers(len(vectors)))]
        if trial % 3 == 0:
            yield rng.normal(size=DIM)
        elif trial % 3 == 1:
            yield row.copy()
        else:
            yield row + rng.normal(scale=1e-6, size=DIM)


@pytest.mark.parametrize("ties", [False, True], ids=["distinct", "ties"])
@pytest.mark.parametrize(
    "weights",
    [None, GroupWeights(), GroupWeights(3.0, 0.5, 0.2), GroupWeights(1.0, 1.0, 0.0)],
    ids=["balanced", "unit", "mixed", "no-local"],
)
def test_exact_on_random_indexes(ties, weights):
    rng = np.random.default_rng(11)
    sizes = [10**4, *rng.integers(1, 2000, size=3).tolist()]
    for size in sizes:
        ids = rng.choice(10 * size, size=size, replace=False)
        vectors = rng.normal(size=(size, DIM))
        if ties and size > 1:
            copies = rng.integers(size, size=size // 4 + 1)
            vectors[rng.integers(size, size=len(copies))] = vectors[copies]
        index = build_index(zip(ids.tolist(), vectors), weights)
        for query in _queries(rng, vectors, 250):
            k = size if rng.random() < 0.05 else int(rng.integers(1, min(size, 20) + 1))
            assert knn_query(index, query, k) == brute_force_query(index, query, k)


def test_doubling_weights_doubles_distances(rng):
    raw = rng.normal(size=(200, DIM))
    weights = GroupWeights(1.0, 2.0, 0.25)
    doubled = GroupWeights(2.0, 4.0, 0.5)
    index = build_index(enumerate(raw), weights)
    index2 = build_index(enumerate(raw), doubled)
    for _ in range(20):
        query = rng.normal(size=DIM)
        result = knn_query(index, query, 15)
        result2 = knn_query(index2, query, 15)
        assert result2.ids == result.ids
        np.testing.assert_allclose(result2.distances, 2 * np.array(result.distances), rtol=1e-12)


def test_results_are_sorted(rng):
    index, _, _ = _random_index(rng, 100)
    result = knn_query(index, rng.normal(size=DIM), 10)
    assert len(result) == 10
    assert list(result.distances) == sorted(result.distances)


def test_ties_break_by_id():
    vector = np.zeros(DIM)
    index = build_index([(9, vector), (3, vector), (5, vector + 1)], GroupWeights())
    result = knn_query(index, vector, 3)
    assert result.ids == (3, 9, 5)
    assert result.distances[:2] == (0.0, 0.0)


def test_entries_are_sorted_by_id(rng):
    index, ids, _ = _random_index(rng, 50)
    np.testing.assert_array_equal(index.ids, np.sort(ids).astype(np.uint64))
    assert index.position(int(ids[0])) == int(np.searchsorted(np.sort(ids), ids[0]))
    with pytest.raises(KeyError):
        index.position(10 * 50 + 1)


def test_query_weights_match_index(rng):
    raw = rng.normal(size=(2, DIM))
    index = build_index([(0, raw[0]), (1, raw[1])], GroupWeights(1.0, 1.0, 0.0))
    query = raw[0].copy()
    query[LOCAL] += 100.0
    assert knn_query(index, FeatureVector(query), 1).top == (0, 0.0)


def test_default_weights_are_balanced(rng):
    index, _, _ = _random_index(rng, 20)
    assert index.weights.w_global == 1.0
    assert index.weights.w_local > 0


def test_k_bounds(rng):
    index, _, _ = _random_index(rng, 5)
    with pytest.raises(InputError):
        knn_query(index, np.zeros(DIM), 0)
    with pytest.raises(InputError):
        knn_query(index, np.zeros(DIM), 6)


def test_build_rejects_bad_entries(rng):
    vector = rng.normal(size=DIM)
    with pytest.raises(DuplicateId):
        build_index([(1, vector), (2, vector), (1, vector)])
    with pytest.raises(DimensionMismatch):
        build_index([(1, vector[:-1])])
    with pytest.raises(InputError):
        build_index([(-1, vector)])
    with pytest.raises(InputError):
        build_index([])


def test_index_rejects_unsorted_ids(rng):
    with pytest.raises(InputError):
        FeatureIndex(np.array([2, 1]), rng.normal(size=(2, DIM)), GroupWeights())
    with pytest.raises(DimensionMismatch):
        FeatureIndex(np.array([1, 2]), rng.normal(size=(2, 3)), GroupWeights())


def test_query_dimension_mismatch(rng):
    index, _, _ = _random_index(rng, 3)
    with pytest.raises(DimensionMismatch):
        knn_query(index, np.zeros(DIM + 1), 1)


def test_query_many_keeps_query_order(rng):
    index, ids, vectors = _random_index(rng, 60)
    results = query_many(index, list(vectors[:12]), 2, workers=4)
    assert [result.top[0] for result in results] == ids[:12].tolist()


def test_save_and_load(tmp_path, rng):
    index, ids, vectors = _random_index(rng, 40, GroupWeights(1.0, 0.5, 0.25))
    path = tmp_path / "models.idx"
    save_index(index, path)
    loaded = load_index(path)
    assert loaded.weights == index.weights
    assert loaded.metadata_path is None
    np.testing.assert_array_equal(loaded.ids, index.ids)
    np.testing.assert_array_equal(loaded.vectors, index.vectors)
    assert knn_query(loaded, vectors[3], 1).top == (int(ids[3]), 0.0)


def test_load_finds_metadata(tmp_path, rng):
    index, _, _ = _random_index(rng, 2)
    path = tmp_path / "models.idx"
    save_index(index, path)
    metadata_path_for(path).write_text("{}")
    assert load_index(path).metadata_path == tmp_path / "models.idx.json"


@pytest.mark.parametrize(
    "mangle",
    [
        lambda raw: raw[:-1],
        lambda raw: raw[:10],
        lambda raw: b"IMFV" + raw[4:],
        lambda raw: raw[:4] + (2).to_bytes(4, "little") + raw[8:],
    ],
    ids=["truncated", "short-header", "magic", "version"],
)
def test_load_rejects_bad_files(tmp_path, rng, mangle):
    index, _, _ = _random_index(rng, 3)
    path = tmp_path / "models.idx"
    save_index(index, path)
    path.write_bytes(mangle(path.read_bytes()))
    with pytest.raises(FormatError):
        load_index(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(IoError):
        load_index(tmp_path / "missing.idx")


def test_metadata_round_trip(tmp_path):
    params = BodyParams("45-64", Gender.FEMALE, 1.62, 70.5)
    path = tmp_path / "models.idx.json"
    write_metadata(path, {4: IndexedModel(tmp_path / "model_000004", params)})
    entries = read_metadata(path)
    assert entries == {4: IndexedModel(tmp_path / "model_000004", params)}


def test_metadata_rejects_garbage(tmp_path):
    path = tmp_path / "models.idx.json"
    path.write_text('{"entries": {"x": {}}}')
    with pytest.raises(FormatError):
        read_metadata(path)
