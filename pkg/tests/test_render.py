import dataclasses

import numpy as np
import pytest

from bodyfit import constants
from bodyfit.errors import FormatError, InputError, MissingSourceJoint, ModelOutOfFrustum
from bodyfit.geometry import (
    JOINT_ORDER,
    CameraIntrinsics,
    DepthFrame,
    JointId,
    extract_silhouette_contour,
    unproject,
)
from bodyfit.geometry.io import depth_preview, parse_pgm, write_preview_pgm
from bodyfit.render import (
    JointMapping,
    RenderConfig,
    View,
    load_joint_mapping,
    project_joints,
    rasterize_depth,
    remap_skeleton,
    render_depth,
)

INTRINSICS = CameraIntrinsics.kinect_default()


def _triangle(z_of_x) -> np.ndarray:
    xy = np.array([[-0.5, -0.4], [0.5, -0.4], [0.0, 0.5]])
    return np.column_stack((xy, [z_of_x(x) for x in xy[:, 0]]))


def test_flat_triangle_has_constant_depth():
    depth = rasterize_depth(_triangle(lambda x: 2.0), np.array([[0, 1, 2]]), INTRINSICS)
    drawn = np.isfinite(depth)
    assert drawn.sum() > 1000
    np.testing.assert_allclose(depth[drawn], 2.0, rtol=1e-12)


def test_tilted_triangle_unprojects_onto_its_plane():
    vertices = _triangle(lambda x: 2.0 + 0.5 * x)
    depth = rasterize_depth(vertices, np.array([[0, 2, 1]]), INTRINSICS)
    frame = DepthFrame(INTRINSICS, np.where(np.isfinite(depth), np.rint(depth * 1000), 0))
    points = unproject(frame).points
    residual = points[:, 2] - (2.0 + 0.5 * points[:, 0])
    assert len(points) > 1000
    assert np.abs(residual).max() < 1e-3


def test_nearest_surface_wins():
    near = _triangle(lambda x: 1.5)
    far = _triangle(lambda x: 3.0)
    depth, faces = rasterize_depth(
        np.concatenate((far, near)), np.array([[0, 1, 2], [3, 4, 5]]), INTRINSICS, True
    )
    drawn = np.isfinite(depth)
    np.testing.assert_allclose(depth[drawn], 1.5)
    assert set(np.unique(faces[drawn])) == {1}
    assert (faces[~drawn] == -1).all()


def test_frontal_render_lies_in_sensor_range(frontal):
    frame, _ = frontal
    assert frame.intrinsics == CameraIntrinsics.portrait_default()
    depth = frame.depth_m()[frame.valid]
    assert frame.valid.sum() > constants.MIN_SUBJECT_AREA
    assert depth.min() >= constants.SENSOR_MIN_DEPTH
    assert depth.max() <= constants.SENSOR_MAX_DEPTH
    # body surface sits around the camera distance
    assert abs(np.median(depth) - constants.CAMERA_DISTANCE) < 0.2


def test_rendered_skeleton_projects_inside_the_frame(frontal):
    frame, skeleton = frontal
    pixels = project_joints(skeleton, frame.intrinsics)
    assert pixels.shape == (15, 2)
    assert (pixels[:, 0] >= 0).all() and (pixels[:, 0] < frame.intrinsics.width).all()
    assert (pixels[:, 1] >= 0).all() and (pixels[:, 1] < frame.intrinsics.height).all()
    # the torso joint lands on the body
    torso = np.rint(pixels[JOINT_ORDER.index(JointId.TO)]).astype(int)
    assert frame.valid[torso[1], torso[0]]


def test_back_view_area_is_close_to_frontal(body, frontal):
    back, _ = render_depth(body, RenderConfig(view=View.BACK))
    front_area = extract_silhouette_contour(frontal[0])[0].sum()
    back_area = extract_silhouette_contour(back)[0].sum()
    assert abs(back_area - front_area) <= 0.15 * front_area


def test_noise_is_seeded(body, frontal):
    cfg = RenderConfig(noise_sd=5.0, seed=9)
    first, _ = render_depth(body, cfg)
    second, _ = render_depth(body, cfg)
    np.testing.assert_array_equal(first.data, second.data)
    assert not np.array_equal(first.data, frontal[0].data)
    other, _ = render_depth(body, dataclasses.replace(cfg, seed=10))
    assert not np.array_equal(first.data, other.data)


def test_model_out_of_view_is_rejected(body):
    shifted = dataclasses.replace(body, vertices=body.vertices + [10.0, 0.0, 0.0])
    with pytest.raises(ModelOutOfFrustum):
        render_depth(shifted)


def test_camera_distance_outside_sensor_range():
    with pytest.raises(InputError):
        RenderConfig(camera_distance=5.0)


def test_preview_levels(frontal):
    frame, _ = frontal
    levels = depth_preview(frame)
    assert levels.dtype == np.uint8
    assert (levels[~frame.valid] == 0).all()
    assert levels[frame.valid].min() >= 1


def test_preview_file(frontal, tmp_path):
    frame, _ = frontal
    path = tmp_path / "preview.pgm"
    write_preview_pgm(path, frame)
    assert path.read_bytes().startswith(b"P5")
    np.testing.assert_array_equal(parse_pgm(path.read_bytes()), depth_preview(frame))


def test_default_mapping_reproduces_generator_skeleton(body):
    remapped = remap_skeleton(body.rig)
    np.testing.assert_allclose(remapped.as_array(), body.skeleton.as_array(), atol=1e-3)


def test_mapping_with_missing_source_name(body):
    mapping = JointMapping.from_dict({**load_joint_mapping().to_dict(), "HE": ["skull"]})
    with pytest.raises(MissingSourceJoint):
        remap_skeleton(body.rig, mapping)


def test_mapping_must_cover_every_joint():
    with pytest.raises(FormatError):
        JointMapping.from_dict({"HE": "head"})


def test_identity_mapping_on_named_skeleton(body):
    named = {joint.value: body.skeleton[joint] for joint in JOINT_ORDER}
    remapped = remap_skeleton(named, JointMapping.identity())
    np.testing.assert_array_equal(remapped.as_array(), body.skeleton.as_array())
