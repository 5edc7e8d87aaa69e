from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from bodyfit import constants
from bodyfit.errors import (
    Disconnected,
    FormatError,
    InputError,
    MissingDescriptor,
    SparseNeighborhood,
)
from bodyfit.evaluation import body_ratios
from bodyfit.features import (
    GENDER,
    GLOBAL,
    LOCAL,
    FeatureVector,
    FpfhDescriptor,
    GenderClassifier,
    GenderRatios,
    GroupWeights,
    SurfaceGraph,
    assemble_feature_vector,
    balanced_weights,
    extract_features,
    format_feature_vector,
    fpfh_at,
    geodesic_distance,
    pair_features,
    parse_feature_vector,
    read_feature_vector,
    write_feature_vector,
)
from bodyfit.geometry import JOINT_ORDER, JointId, PointCloud
from bodyfit.synth import BodyParams, Gender, build_mesh, sample_surface

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def surface(body):
    return sample_surface(body, 8000, seed=3)


@pytest.fixture(scope="module")
def frontal_features(frontal, scan):
    frame, skeleton = frontal
    measurements, scanned = scan
    return extract_features(frame, skeleton, measurements, cloud=scanned.cloud)


def _uniform_descriptor(value: float = 1 / constants.FPFH_BINS) -> FpfhDescriptor:
    return FpfhDescriptor(np.full(3 * constants.FPFH_BINS, value))


def _raw_vector(rng: np.random.Generator) -> np.ndarray:
    raw = rng.random(constants.FEATURE_DIM)
    raw[GLOBAL] = (1.75, 0.6, 0.8, 0.15)
    raw[GENDER] = (1.3, 1.1)
    return raw


def test_fpfh_histograms_are_normalized(surface, body):
    descriptor = fpfh_at(surface, body.skeleton[JointId.TO])
    assert len(descriptor) == 33
    assert (descriptor.values >= 0).all()
    for histogram in descriptor.histograms():
        assert len(histogram) == constants.FPFH_BINS
        assert histogram.sum() == pytest.approx(1.0, abs=1e-6)


def test_fpfh_is_invariant_to_rigid_motion(surface, body, rng):
    joint = body.skeleton[JointId.LS]
    reference = fpfh_at(surface, joint)
    for seed in range(100):
        rotation = Rotation.random(random_state=seed).as_matrix()
        translation = rng.normal(size=3)
        moved = surface.transformed(rotation, translation)
        descriptor = fpfh_at(moved, rotation @ joint + translation)
        assert np.abs(descriptor.values - reference.values).sum() <= 0.02


def test_fpfh_ignores_point_order(surface, body, rng):
    order = rng.permutation(len(surface))
    shuffled = PointCloud(surface.points[order], surface.normals[order])
    for joint in (JointId.TO, JointId.LS, JointId.RK):
        np.testing.assert_allclose(
            fpfh_at(shuffled, body.skeleton[joint]).values,
            fpfh_at(surface, body.skeleton[joint]).values,
            atol=1e-12,
        )


def test_pair_features_do_not_depend_on_pair_order(rng):
    for _ in range(20):
        a, b = rng.normal(size=(2, 3))
        na, nb = (n / np.linalg.norm(n) for n in rng.normal(size=(2, 3)))
        forward = pair_features(a, na, b[None], nb[None])
        backward = pair_features(b, nb, a[None], na[None])
        np.testing.assert_allclose(np.ravel(forward), np.ravel(backward), atol=1e-12)


def test_pair_features_on_a_plane():
    source = np.zeros(3)
    normal = np.array([0.0, 0.0, 1.0])
    targets = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [-1.0, -1.0, 0.0]])
    alpha, phi, theta = pair_features(source, normal, targets, np.tile(normal, (3, 1)))
    np.testing.assert_allclose(alpha, 0.0, atol=1e-12)
    np.testing.assert_allclose(phi, 0.0, atol=1e-12)
    np.testing.assert_allclose(theta, 0.0, atol=1e-12)


def test_fpfh_needs_enough_neighbors():
    points = np.array([[0.0, 0, 2], [0.01, 0, 2], [0, 0.01, 2], [0.01, 0.01, 2]])
    cloud = PointCloud(points, np.tile([0.0, 0.0, -1.0], (4, 1)))
    with pytest.raises(SparseNeighborhood):
        fpfh_at(cloud, points[0])


def test_fpfh_needs_normals(surface):
    with pytest.raises(InputError):
        fpfh_at(PointCloud(surface.points), surface.points[0])


def test_geodesic_along_a_straight_row():
    xs, ys = np.meshgrid(np.arange(-30, 31) * 0.01, np.arange(-10, 11) * 0.01)
    points = np.column_stack((xs.ravel(), ys.ravel(), np.full(xs.size, 2.0)))
    distance = geodesic_distance(PointCloud(points), (-0.2, 0.0, 2.0), (0.2, 0.0, 2.0))
    assert distance == pytest.approx(0.4, rel=1e-9)


def test_geodesic_around_a_half_cylinder():
    radius = 0.15
    angles, ys = np.meshgrid(np.linspace(0, math.pi, 181), np.arange(-10, 11) * 0.005)
    points = np.column_stack(
        (radius * np.cos(angles.ravel()), ys.ravel(), 2.0 - radius * np.sin(angles.ravel()))
    )
    a, b = np.array([radius, 0.0, 2.0]), np.array([-radius, 0.0, 2.0])
    distance = geodesic_distance(PointCloud(points), a, b)
    assert distance == pytest.approx(math.pi * radius, rel=1e-3)
    assert distance > np.linalg.norm(a - b)


def test_geodesic_on_body_scan_is_never_shorter_than_straight_line(scan, rng):
    _, scanned = scan
    cloud = scanned.cloud.subset(rng.random(len(scanned.cloud)) < 0.25)
    graph = SurfaceGraph(cloud, max_edge=0.06)
    for _ in range(5):
        a, b = cloud.points[rng.choice(len(cloud), size=2, replace=False)]
        try:
            distance = graph.distance(a, b)
        except Disconnected:
            continue
        assert distance >= np.linalg.norm(a - b) - 1e-9


def test_geodesic_disconnected_parts():
    cluster = np.array([[0.0, 0, 2], [0.01, 0, 2], [0, 0.01, 2]])
    points = np.vstack((cluster, cluster + (1.0, 0, 0)))
    graph = SurfaceGraph(PointCloud(points))
    with pytest.raises(Disconnected):
        graph.distance(points[0], points[3])
    with pytest.raises(Disconnected):
        graph.distance(points[0], (0.5, 0.5, 2.0))
    assert graph.distance(points[0], points[0]) == 0.0


def test_group_weights_validation():
    with pytest.raises(InputError):
        GroupWeights(-1.0, 1.0, 1.0)
    with pytest.raises(InputError):
        GroupWeights(0.0, 0.0, 0.0)
    with pytest.raises(InputError):
        GroupWeights(math.inf, 1.0, 1.0)
    scale = GroupWeights(2.0, 3.0, 0.5).expand()
    assert len(scale) == constants.FEATURE_DIM
    assert set(scale[GLOBAL]) == {2.0}
    assert set(scale[GENDER]) == {3.0}
    assert set(scale[LOCAL]) == {0.5}


def test_feature_vector_applies_weights(rng):
    raw = _raw_vector(rng)
    vector = FeatureVector(raw, GroupWeights(2.0, 1.0, 0.0))
    np.testing.assert_allclose(vector.values[GLOBAL], 2 * raw[GLOBAL])
    np.testing.assert_allclose(vector.values[GENDER], raw[GENDER])
    assert not vector.values[LOCAL].any()
    np.testing.assert_array_equal(vector.reweighted(GroupWeights()).values, raw)


def test_feature_vector_validation(rng):
    with pytest.raises(InputError):
        FeatureVector(np.zeros(constants.FEATURE_DIM - 1))
    raw = _raw_vector(rng)
    raw[10] = math.nan
    with pytest.raises(InputError):
        FeatureVector(raw)


def test_assemble_feature_vector_layout(scan):
    measurements, _ = scan
    descriptors = {joint: _uniform_descriptor() for joint in JOINT_ORDER}
    vector = assemble_feature_vector(measurements, GenderRatios(1.4, 1.05), descriptors)
    assert len(vector) == constants.FEATURE_DIM == 501
    assert vector.raw[0] == pytest.approx(measurements.height / 100)
    assert vector.raw[3] == pytest.approx(measurements.shoulder_length / 100)
    assert tuple(vector.raw[GENDER]) == (1.4, 1.05)


def test_assemble_feature_vector_missing_joint(scan):
    measurements, _ = scan
    descriptors = {joint: _uniform_descriptor() for joint in JOINT_ORDER[:-1]}
    with pytest.raises(MissingDescriptor):
        assemble_feature_vector(measurements, GenderRatios(1.4, 1.05), descriptors)


def test_feature_file_round_trip(tmp_path, rng):
    vector = FeatureVector(_raw_vector(rng), GroupWeights(1.0, 2.0, 0.25))
    path = tmp_path / constants.FEATURES_FILE
    write_feature_vector(path, vector)
    loaded = read_feature_vector(path)
    assert loaded.weights == vector.weights
    np.testing.assert_allclose(loaded.raw, vector.raw, rtol=1e-6)
    assert path.read_bytes()[:4] == constants.FEATURE_MAGIC


def test_feature_file_zero_weight_drops_group(rng):
    vector = FeatureVector(_raw_vector(rng), GroupWeights(1.0, 1.0, 0.0))
    loaded = parse_feature_vector(format_feature_vector(vector))
    assert not loaded.raw[LOCAL].any()
    np.testing.assert_allclose(loaded.raw[GLOBAL], vector.raw[GLOBAL], rtol=1e-6)


@pytest.mark.parametrize(
    "mangle",
    [
        lambda raw: raw[:-4],
        lambda raw: raw[:6],
        lambda raw: b"XXXX" + raw[4:],
        lambda raw: raw[:4] + (9).to_bytes(2, "little") + raw[6:],
        lambda raw: raw[:6] + (12).to_bytes(2, "little") + raw[8:],
    ],
    ids=["truncated", "short-header", "magic", "version", "dimension"],
)
def test_feature_file_rejects_bad_input(mangle, rng):
    raw = format_feature_vector(FeatureVector(_raw_vector(rng)))
    with pytest.raises(FormatError):
        parse_feature_vector(mangle(raw))


def test_balanced_weights_equalize_group_variance(rng):
    raw = np.stack([_raw_vector(rng) for _ in range(40)])
    raw[:, GLOBAL] += rng.normal(scale=0.05, size=(40, 4))
    weights = balanced_weights(raw, w_global=2.0)
    assert weights.w_global == 2.0
    assert weights.w_gender == 1.0
    weighted = raw * weights.expand()
    assert weighted[:, LOCAL].var(axis=0).sum() == pytest.approx(
        weighted[:, GLOBAL].var(axis=0).sum()
    )


def test_balanced_weights_without_spread():
    raw = np.ones((5, constants.FEATURE_DIM))
    assert balanced_weights(raw).w_local == 1.0


def test_gender_classifier_separates_clean_data(rng):
    male = np.column_stack((rng.uniform(1.1, 1.2, 20), rng.uniform(0.9, 1.0, 20)))
    female = np.column_stack((rng.uniform(1.1, 1.2, 20), rng.uniform(1.1, 1.3, 20)))
    ratios = np.vstack((male, female))
    labels = [Gender.MALE] * 20 + ["female"] * 20
    classifier = GenderClassifier.fit(ratios, labels)
    assert classifier.feature == 1
    assert classifier.above is Gender.FEMALE
    assert classifier.accuracy(ratios, labels) == 1.0
    assert classifier.predict([[1.15, 1.25]]) == [Gender.FEMALE]


def test_gender_classifier_needs_labels():
    with pytest.raises(InputError):
        GenderClassifier.fit(np.ones((3, 2)), [Gender.MALE])


def test_extract_features_on_rendered_body(frontal_features, scan):
    measurements, _ = scan
    vector = frontal_features
    assert len(vector) == constants.FEATURE_DIM
    assert vector.raw[0] == pytest.approx(measurements.height / 100)
    assert vector.raw[5] == pytest.approx(measurements.girth_hip / measurements.girth_waist)
    assert vector.raw[4] > 0
    sums = vector.raw[LOCAL].reshape(len(JOINT_ORDER), 3, constants.FPFH_BINS).sum(axis=2)
    np.testing.assert_allclose(sums, 1.0, atol=1e-6)


def test_female_ratios_are_larger_at_equal_height_and_weight():
    pairs = [(height, weight) for height in (1.60, 1.70, 1.80) for weight in (60.0, 75.0, 90.0)]
    larger = 0
    for height, weight in pairs:
        male = body_ratios(build_mesh(BodyParams("25-44", Gender.MALE, height, weight)))
        female = body_ratios(build_mesh(BodyParams("25-44", Gender.FEMALE, height, weight)))
        larger += female[0] > male[0] and female[1] > male[1]
    assert larger >= math.ceil(0.95 * len(pairs))


def _golden_vector() -> FeatureVector:
    return FeatureVector(np.arange(constants.FEATURE_DIM) / 64, GroupWeights(1.0, 2.0, 0.5))


def test_feature_file_layout_matches_golden_bytes():
    golden = (DATA / "feature_vector.imfv").read_bytes()
    assert format_feature_vector(_golden_vector()) == golden
    parsed = parse_feature_vector(golden)
    assert parsed.weights == GroupWeights(1.0, 2.0, 0.5)
    np.testing.assert_array_equal(parsed.raw, _golden_vector().raw)
