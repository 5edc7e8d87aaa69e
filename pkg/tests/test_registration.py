from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from bodyfit.errors import (
    DegenerateInput,
    DegenerateSkeleton,
    EmptyCloud,
    FormatError,
    InputError,
)
from bodyfit.geometry import JOINT_ORDER, PointCloud, Skeleton15
from bodyfit.registration import (
    RigidTransform,
    fit_rigid,
    icp_register,
    skeleton_align_init,
)
from bodyfit.synth import sample_surface


@pytest.fixture(scope="module")
def target(body):
    return sample_surface(body, 5000, seed=11)


def _random_transform(seed: int, shift: float = 1.0) -> RigidTransform:
    rotation = Rotation.random(random_state=seed).as_matrix()
    translation = np.random.default_rng(seed).normal(scale=shift, size=3)
    return RigidTransform(rotation, translation)


def test_transform_validation():
    with pytest.raises(InputError):
        RigidTransform(np.eye(3) * 2, np.zeros(3))
    with pytest.raises(InputError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(InputError):
        RigidTransform(np.eye(3), [0.0, np.nan, 0.0])


def test_compose_and_inverse(rng):
    first, second = _random_transform(1), _random_transform(2)
    points = rng.normal(size=(10, 3))
    np.testing.assert_allclose(
        second.compose(first).apply(points), second.apply(first.apply(points)), atol=1e-12
    )
    roundtrip = first.compose(first.inverse())
    np.testing.assert_allclose(roundtrip.as_matrix(), np.eye(4), atol=1e-12)
    np.testing.assert_allclose(RigidTransform.identity().apply(points), points)


def test_dict_round_trip():
    transform = _random_transform(5)
    data = transform.to_dict()
    assert len(data["rotation"]) == 9
    assert len(data["translation"]) == 3
    loaded = RigidTransform.from_dict(data)
    np.testing.assert_allclose(loaded.as_matrix(), transform.as_matrix())
    with pytest.raises(FormatError):
        RigidTransform.from_dict({"rotation": [1, 0, 0], "translation": [0, 0, 0]})
    with pytest.raises(FormatError):
        RigidTransform.from_dict({"translation": [0, 0, 0]})


def test_fit_rigid_recovers_transform(rng):
    source = rng.normal(size=(30, 3))
    for seed in range(5):
        expected = _random_transform(seed)
        found = fit_rigid(source, expected.apply(source))
        np.testing.assert_allclose(found.rotation, expected.rotation, atol=1e-9)
        np.testing.assert_allclose(found.translation, expected.translation, atol=1e-9)


def test_fit_rigid_never_reflects(rng):
    source = rng.normal(size=(20, 3))
    found = fit_rigid(source, source * (-1.0, 1.0, 1.0))
    assert np.linalg.det(found.rotation) == pytest.approx(1.0)


def test_fit_rigid_degenerate_input():
    line = np.outer(np.arange(5.0), (1.0, 2.0, 3.0))
    with pytest.raises(DegenerateInput):
        fit_rigid(line, line + 1.0)
    with pytest.raises(DegenerateInput):
        fit_rigid(line[:2], line[:2])
    with pytest.raises(InputError):
        fit_rigid(line, line[:4])


def test_skeleton_alignment(body):
    expected = _random_transform(7, shift=0.5)
    moved = body.skeleton.transformed(expected.rotation, expected.translation)
    found = skeleton_align_init(moved, body.skeleton)
    np.testing.assert_allclose(found.as_matrix(), expected.inverse().as_matrix(), atol=1e-9)


def test_skeleton_alignment_collinear():
    line = Skeleton15.from_array(np.outer(np.arange(len(JOINT_ORDER)) * 0.1, (0.0, 1.0, 0.0)))
    with pytest.raises(DegenerateSkeleton):
        skeleton_align_init(line, line)


def test_icp_self_registration(target):
    report = icp_register(target, target)
    assert report.errors == [0.0]
    assert report.iterations == 1
    assert report.converged
    np.testing.assert_allclose(report.transform.as_matrix(), np.eye(4))


def test_icp_reduces_error(target, rng):
    offset = RigidTransform(Rotation.from_euler("y", 4, degrees=True).as_matrix(), (0.02, 0, 0))
    source = offset.apply_cloud(target.subset(rng.random(len(target)) < 0.3))
    report = icp_register(source, target)
    assert report.iterations == len(report.errors) >= 2
    assert all(later <= earlier for earlier, later in zip(report.errors, report.errors[1:]))
    assert report.errors[-1] < 0.5 * report.errors[0]


def test_icp_with_skeleton_init(body, target):
    offset = _random_transform(3, shift=0.3)
    source = offset.apply_cloud(target)
    init = skeleton_align_init(
        body.skeleton.transformed(offset.rotation, offset.translation), body.skeleton
    )
    report = icp_register(source, target, init)
    assert report.errors[0] < 1e-9
    np.testing.assert_allclose(report.transform.apply(source.points), target.points, atol=1e-6)


def test_icp_report_layout(target):
    data = icp_register(target, target).to_dict()
    assert set(data) == {"iterations", "errors_m", "rotation", "translation", "converged"}
    assert data["errors_m"] == [0.0]


def test_icp_input_checks(target):
    with pytest.raises(EmptyCloud):
        icp_register(PointCloud(np.empty((0, 3))), target)
    with pytest.raises(EmptyCloud):
        icp_register(target, PointCloud(np.empty((0, 3))))
    with pytest.raises(InputError):
        icp_register(target, target, max_iterations=0)
