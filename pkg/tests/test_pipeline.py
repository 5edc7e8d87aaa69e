from __future__ import annotations

import json

import numpy as np
import pytest

from bodyfit import constants
from bodyfit.errors import InputError, IoError
from bodyfit.features import read_feature_vector
from bodyfit.geometry.io import write_depth_frame, write_skeleton
from bodyfit.pipeline import PipelineConfig, index_dataset, run_pipeline, synthetic_features
from bodyfit.render import RenderConfig, render_depth
from bodyfit.retrieval import load_index, read_metadata
from bodyfit.sizing import SIZE_LABELS
from bodyfit.synth import bundle_name, export_model, import_model


@pytest.fixture(scope="module")
def dataset(tmp_path_factory, body, female_body):
    root = tmp_path_factory.mktemp("dataset")
    export_model(body, root / bundle_name(0))
    export_model(female_body, root / bundle_name(1))
    return root


@pytest.fixture(scope="module")
def indexed(dataset, tmp_path_factory):
    path = tmp_path_factory.mktemp("index") / "models.idx"
    index, skipped = index_dataset(dataset, path, workers=2)
    return path, index, skipped


@pytest.fixture(scope="module")
def capture(dataset, tmp_path_factory):
    """Frame files of the first dataset body, rendered the way the index saw it."""
    root = tmp_path_factory.mktemp("capture")
    frame, skeleton = render_depth(import_model(dataset / bundle_name(0)), RenderConfig())
    write_depth_frame(root / "frame.pgm", frame)
    write_skeleton(root / "frame_skeleton.json", skeleton)
    return root / "frame.pgm", root / "frame_skeleton.json"


def test_index_dataset(indexed, dataset):
    path, index, skipped = indexed
    assert skipped == []
    assert index.ids.tolist() == [0, 1]
    loaded = load_index(path)
    np.testing.assert_array_equal(loaded.vectors, index.vectors)
    entries = read_metadata(loaded.metadata_path)
    assert entries[0].bundle == (dataset / bundle_name(0)).resolve()
    assert entries[1].params == import_model(dataset / bundle_name(1)).params


def test_index_dataset_without_bundles(tmp_path):
    with pytest.raises(InputError):
        index_dataset(tmp_path, tmp_path / "models.idx")


def test_synthetic_features_are_deterministic(dataset):
    model = import_model(dataset / bundle_name(1))
    first, measurements = synthetic_features(model)
    second, _ = synthetic_features(model)
    np.testing.assert_array_equal(first.raw, second.raw)
    assert first.raw[0] == pytest.approx(measurements.height / 100)


def test_pipeline_retrieves_generating_body(indexed, capture, tmp_path):
    depth, skeleton = capture
    keep = tmp_path / "intermediates"
    cfg = PipelineConfig(
        depth,
        skeleton,
        indexed[0],
        k=2,
        icp_iterations=5,
        icp_samples=5000,
        keep_intermediates=keep,
    )
    result = run_pipeline(cfg)

    assert result.neighbors.ids == (0, 1)
    assert result.neighbors.top == (0, 0.0)
    assert result.size in SIZE_LABELS
    errors = result.icp.errors
    assert all(later <= earlier for earlier, later in zip(errors, errors[1:]))

    data = result.to_dict()
    assert set(data) == {"measurements", "neighbors", "size", "icp"}
    assert data["neighbors"][0] == {"id": 0, "distance": 0.0}
    for name in (
        "cloud.ply",
        "contour.csv",
        constants.FEATURES_FILE,
        "measurements.json",
        "neighbors.json",
        "icp.json",
    ):
        assert (keep / name).is_file()
    saved = read_feature_vector(keep / constants.FEATURES_FILE)
    np.testing.assert_allclose(saved.raw, result.features.raw, rtol=1e-6)
    assert json.loads((keep / "measurements.json").read_text()) == data["measurements"]


def test_pipeline_without_registration(indexed, capture):
    depth, skeleton = capture
    result = run_pipeline(PipelineConfig(depth, skeleton, indexed[0], k=5, register=False))
    assert result.icp is None
    assert "icp" not in result.to_dict()
    assert len(result.neighbors) == 2


def test_pipeline_reports_missing_files(indexed, capture, tmp_path):
    depth, _ = capture
    missing = tmp_path / "missing_skeleton.json"
    with pytest.raises(IoError) as exc_info:
        run_pipeline(PipelineConfig(depth, missing, indexed[0]))
    assert exc_info.value.path == missing
    assert exc_info.value.stage == "load"


def test_pipeline_index_may_come_from_dataset(capture, dataset, tmp_path):
    depth, skeleton = capture
    PipelineConfig(depth, skeleton, tmp_path / "new.idx", dataset=dataset).check_paths()
    with pytest.raises(IoError):
        PipelineConfig(depth, skeleton, tmp_path / "new.idx").check_paths()


def test_pipeline_config_validation(capture, tmp_path):
    depth, skeleton = capture
    with pytest.raises(InputError):
        PipelineConfig(depth, skeleton, tmp_path / "models.idx", k=0)
    with pytest.raises(InputError):
        PipelineConfig(depth, skeleton, tmp_path / "models.idx", icp_samples=0)
