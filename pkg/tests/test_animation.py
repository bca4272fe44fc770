import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imime import animation as anim
from imime.animation import (
    PITCH_CLASS_MORPHS,
    Bone,
    MorphTarget,
    PoseParams,
    Skeleton,
    blend_morphs,
    blend_poses,
    bone_tip,
    build_morph_library,
    forward_kinematics,
    perlin_1d,
    perturb_params,
    skin,
)


# --- morph blending -------------------------------------------------------------


def test_blend_morphs_hand_example():
    base = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    up = MorphTarget("up", np.array([[0, 0, 1.0]] * 4))
    right = MorphTarget("right", np.array([[1.0, 0, 0]] * 4))
    out = blend_morphs(base, [up, right], np.array([0.5, 0.25]))
    expected = base + np.array([[0.25, 0.0, 0.5]] * 4)
    np.testing.assert_allclose(out, expected)


def test_blend_morphs_zero_weights_identity():
    base, targets = build_morph_library()
    out = blend_morphs(base, targets, np.zeros(len(targets)))
    np.testing.assert_array_equal(out, base)
    assert out is not base  # no aliasing


def test_blend_morphs_length_mismatch():
    base = np.zeros((4, 3))
    with pytest.raises(anim.LengthMismatch):
        blend_morphs(base, [MorphTarget("t", np.zeros((4, 3)))], np.array([0.5, 0.5]))
    with pytest.raises(anim.LengthMismatch):
        blend_morphs(base, [MorphTarget("t", np.zeros((5, 3)))], np.array([0.5]))


# --- forward kinematics ------------------------------------------------------------


def z_bone(name, parent, offset, length):
    return Bone(name, parent, np.asarray(offset, float), length, np.array([0.0, 0.0, 1.0]))


def test_fk_single_bone_quarter_turn():
    skel = Skeleton([z_bone("root", None, [1.0, 0.0, 0.0], 2.0)])
    tms = forward_kinematics(skel, np.array([math.pi / 2]))
    tip = bone_tip(skel, tms, 0)
    np.testing.assert_allclose(tip, [1.0, 2.0, 0.0], atol=1e-12)


def test_fk_two_bone_chain_hand_computed():
    # root rotated 90deg about z, child offset (2,0,0) rotated another 90deg:
    # child joint sits at root * (2,0,0) = (0,2,0); child x-axis now points (-1,0,0)
    skel = Skeleton(
        [
            z_bone("root", None, [0.0, 0.0, 0.0], 2.0),
            z_bone("child", 0, [2.0, 0.0, 0.0], 1.5),
        ]
    )
    tms = forward_kinematics(skel, np.array([math.pi / 2, math.pi / 2]))
    np.testing.assert_allclose(tms[1][:3, 3], [0.0, 2.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(bone_tip(skel, tms, 1), [-1.5, 2.0, 0.0], atol=1e-12)


def _rodrigues3(axis, angle):
    # independent 3x3 Rodrigues formula for the transform-stack oracle
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_fk_matches_transform_stack_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 5
    bones = []
    for i in range(n):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        bones.append(Bone(f"b{i}", None if i == 0 else i - 1, rng.normal(size=3), 1.0, axis))
    skel = Skeleton(bones)
    angles = rng.uniform(-math.pi, math.pi, size=n)
    tms = forward_kinematics(skel, angles)

    # oracle: accumulate (R, t) pairs without homogeneous matrices
    R, t = np.eye(3), np.zeros(3)
    for i, bone in enumerate(bones):
        t = t + R @ bone.offset
        R = R @ _rodrigues3(bone.axis, angles[i])
        np.testing.assert_allclose(tms[i][:3, :3], R, atol=1e-9)
        np.testing.assert_allclose(tms[i][:3, 3], t, atol=1e-9)
        np.testing.assert_allclose(tms[i][3], [0, 0, 0, 1], atol=0)


def test_skeleton_validation():
    with pytest.raises(ValueError):
        Skeleton([z_bone("a", None, [0, 0, 0], 1.0), z_bone("b", None, [0, 0, 0], 1.0)])
    with pytest.raises(ValueError):
        Skeleton([z_bone("a", 1, [0, 0, 0], 1.0), z_bone("b", None, [0, 0, 0], 1.0)])


def test_fk_angle_count_mismatch():
    skel = Skeleton([z_bone("root", None, [0, 0, 0], 1.0)])
    with pytest.raises(anim.AngleCountMismatch):
        forward_kinematics(skel, np.array([0.1, 0.2]))


# --- skinning ------------------------------------------------------------------------


def test_skin_identity_at_rest():
    skel = Skeleton([z_bone("root", None, [0, 0, 0], 1.0), z_bone("child", 0, [1, 0, 0], 1.0)])
    rest = forward_kinematics(skel, np.zeros(2))
    rng = np.random.default_rng(4)
    base = rng.normal(size=(10, 3))
    weights = [[(0, 0.3), (1, 0.7)]] * 10
    out = skin(base, rest, rest, weights)
    np.testing.assert_allclose(out, base, atol=1e-9)


def test_skin_rigid_rotation():
    skel = Skeleton([z_bone("root", None, [0, 0, 0], 1.0)])
    rest = forward_kinematics(skel, np.zeros(1))
    posed = forward_kinematics(skel, np.array([math.pi / 2]))
    base = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 3.0, 4.0]])
    out = skin(base, posed, rest, [[(0, 1.0)]] * 3)
    expected = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [-3.0, 2.0, 4.0]])
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_skin_blended_translation():
    # bone 1 translated by (0,0,2) vs rest; a 50/50 vertex moves half way
    skel = Skeleton([z_bone("a", None, [0, 0, 0], 1.0), z_bone("b", 0, [0, 0, 0], 1.0)])
    rest = forward_kinematics(skel, np.zeros(2))
    posed = [m.copy() for m in rest]
    posed[1] = posed[1].copy()
    posed[1][2, 3] += 2.0
    base = np.array([[1.0, 1.0, 0.0]])
    out = skin(base, posed, rest, [[(0, 0.5), (1, 0.5)]])
    np.testing.assert_allclose(out, [[1.0, 1.0, 1.0]], atol=1e-12)


def test_skin_weight_sum_error():
    skel = Skeleton([z_bone("root", None, [0, 0, 0], 1.0)])
    rest = forward_kinematics(skel, np.zeros(1))
    with pytest.raises(anim.WeightSumError):
        skin(np.zeros((1, 3)), rest, rest, [[(0, 0.9)]])


# --- gradient noise --------------------------------------------------------------------


def test_perlin_zero_at_lattice_points():
    for seed in (0, 1, 42, 987654321):
        for i in range(-5, 6):
            assert perlin_1d(seed, float(i)) == 0.0


def test_perlin_bounded_and_nontrivial():
    rng = np.random.default_rng(6)
    vals = np.array([perlin_1d(11, t) for t in rng.uniform(-50, 50, 5000)])
    assert np.all(np.abs(vals) <= 1.0)
    assert np.abs(vals).max() > 0.2  # actually moves


def test_perlin_deterministic_and_seed_sensitive():
    assert perlin_1d(5, 3.37) == perlin_1d(5, 3.37)
    ts = np.linspace(0.05, 199.95, 4000)
    a = np.array([perlin_1d(5, t) for t in ts])
    b = np.array([perlin_1d(6, t) for t in ts])
    assert not np.allclose(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.2


def test_perlin_continuity_across_lattice():
    for t0 in (0.0, 1.0, 2.0, -3.0):
        left = perlin_1d(9, t0 - 1e-7)
        right = perlin_1d(9, t0 + 1e-7)
        assert abs(left - right) < 1e-5


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), t=st.floats(-1e4, 1e4))
def test_perlin_range_property(seed, t):
    assert -1.0 <= perlin_1d(seed, t) <= 1.0


# --- pose perturbation and blending ------------------------------------------------------


def _pose():
    return PoseParams(angles=np.array([0.1, -0.4, 1.2]), morph_weights=np.array([0.0, 0.5, 1.0]))


def test_perturb_zero_amplitude_identity():
    p = _pose()
    out = perturb_params(p, seed=3, t=2.7, amplitude=0.0)
    np.testing.assert_array_equal(out.angles, p.angles)
    np.testing.assert_array_equal(out.morph_weights, p.morph_weights)


def test_perturb_deterministic_and_param_decoupled():
    p = PoseParams(angles=np.zeros(4), morph_weights=np.zeros(0))
    a = perturb_params(p, seed=8, t=1.3, amplitude=1.0)
    b = perturb_params(p, seed=8, t=1.3, amplitude=1.0)
    np.testing.assert_array_equal(a.angles, b.angles)
    # distinct parameters see distinct noise streams
    assert len(set(np.round(a.angles, 12))) > 1


def test_perturb_clamps_morph_weights():
    p = PoseParams(angles=np.zeros(1), morph_weights=np.array([0.0, 1.0]))
    out = perturb_params(p, seed=1, t=0.4, amplitude=50.0)
    assert np.all(out.morph_weights >= 0.0) and np.all(out.morph_weights <= 1.0)


def test_perturb_negative_amplitude_rejected():
    with pytest.raises(ValueError):
        perturb_params(_pose(), seed=1, t=0.0, amplitude=-0.1)


def test_blend_poses_endpoints():
    a, b = _pose(), PoseParams(angles=np.array([0.5, 0.2, -1.0]), morph_weights=np.array([1.0, 0.0, 0.5]))
    np.testing.assert_allclose(blend_poses(a, b, 0.0).angles, a.angles, atol=1e-12)
    np.testing.assert_allclose(blend_poses(a, b, 0.0).morph_weights, a.morph_weights, atol=1e-12)
    end = blend_poses(a, b, 1.0)
    np.testing.assert_allclose(np.mod(end.angles - b.angles + 1e-9, 2 * math.pi), np.full(3, 1e-9), atol=1e-7)
    np.testing.assert_allclose(end.morph_weights, b.morph_weights, atol=1e-12)


def test_blend_poses_takes_shortest_arc():
    a = PoseParams(angles=np.array([0.1]), morph_weights=np.zeros(1))
    b = PoseParams(angles=np.array([2 * math.pi - 0.1]), morph_weights=np.zeros(1))
    mid = blend_poses(a, b, 0.5)
    # wraps through zero rather than sweeping almost a full turn
    np.testing.assert_allclose(mid.angles, [0.0], atol=1e-12)


def test_blend_poses_layout_mismatch():
    a = _pose()
    b = PoseParams(angles=np.zeros(2), morph_weights=np.zeros(3))
    with pytest.raises(anim.LayoutMismatch):
        blend_poses(a, b, 0.5)


# --- shipped library ---------------------------------------------------------------------


def test_morph_library_size_and_labels():
    base, targets = build_morph_library()
    assert len(targets) == 42
    labels = [t.label for t in targets]
    assert len(set(labels)) == 42
    for t in targets:
        assert t.deltas.shape == base.shape
        assert np.abs(t.deltas).max() > 0


def test_pitch_class_mapping_covers_all_classes():
    assert len(PITCH_CLASS_MORPHS) == 12
    _, targets = build_morph_library()
    labels = {t.label for t in targets}
    assert set(PITCH_CLASS_MORPHS) <= labels


def test_dump_mesh_csv(tmp_path):
    mesh = anim.build_face_mesh(4, 4)
    path = tmp_path / "mesh.csv"
    anim.dump_mesh_csv(mesh, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,y,z"
    assert len(lines) == 17
