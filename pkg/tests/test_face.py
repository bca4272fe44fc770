import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imime import face
from imime.frames import DimensionMismatch, Frame


def flat_frame(value=100, size=64):
    return Frame(np.full((size, size), value, dtype=np.uint8))


def frame_from(arr):
    return Frame(np.asarray(arr, dtype=np.uint8))


# --- partition_regions -------------------------------------------------------


def test_partition_default_layout_mouth_in_lower_third():
    rect = face.FaceRect(0, 0, 140, 140)
    partition = face.partition_regions(rect)
    mouth = partition[6]
    x, y, w, h = mouth
    assert y >= 0.7 * 140 - 1
    assert y + h <= 0.9 * 140 + 1
    # horizontally centered
    assert abs((x + w / 2) - 70) <= 1


def test_partition_regions_disjoint_and_inside():
    rect = face.FaceRect(10, 20, 80, 90)
    regions = face.partition_regions(rect)
    boxes = []
    for x, y, w, h in regions:
        assert x >= rect.x and y >= rect.y
        assert x + w <= rect.x + rect.w and y + h <= rect.y + rect.h
        assert w * h >= 4
        boxes.append((x, y, w, h))
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            xi, yi, wi, hi = boxes[i]
            xj, yj, wj, hj = boxes[j]
            overlap_x = max(0, min(xi + wi, xj + wj) - max(xi, xj))
            overlap_y = max(0, min(yi + hi, yj + hj) - max(yi, yj))
            assert overlap_x * overlap_y == 0


def test_partition_smallest_legal_rect():
    regions = face.partition_regions(face.FaceRect(10, 10, 14, 14))
    assert all(w * h >= 4 for _, _, w, h in regions)


def test_partition_too_small_raises():
    with pytest.raises(face.RectTooSmall):
        face.partition_regions(face.FaceRect(0, 0, 13, 13))


# --- block_flow ---------------------------------------------------------------


def test_block_flow_identical_frames_zero():
    f = flat_frame()
    field = face.block_flow(f, f, (8, 8, 32, 32))
    assert np.all(field.vectors == 0)


def _textured(size, rng):
    return Frame(rng.integers(0, 256, size=(size, size)).astype(np.uint8))


def test_block_flow_exact_on_shift():
    rng = np.random.default_rng(7)
    prev = _textured(64, rng)
    shifted = np.full((64, 64), 128, dtype=np.uint8)
    shifted[:, 3:] = prev.pixels[:, :-3]
    cur = Frame(shifted)
    field = face.block_flow(prev, cur, (16, 16, 32, 32))
    assert np.all(field.vectors[..., 0] == 3)
    assert np.all(field.vectors[..., 1] == 0)


def test_block_flow_local_motion_confined():
    rng = np.random.default_rng(8)
    prev = _textured(64, rng)
    cur_px = prev.pixels.copy()
    # shift a mouth-sized patch down by 2
    cur_px[34:48, 24:40] = prev.pixels[32:46, 24:40]
    cur = Frame(cur_px)
    moving = face.block_flow(prev, cur, (24, 36, 16, 8))
    assert np.all(np.abs(moving.vectors[..., 1]) >= 1)
    still = face.block_flow(prev, cur, (0, 0, 16, 16))
    assert np.all(still.vectors == 0)


def test_block_flow_dimension_mismatch():
    a = flat_frame(size=64)
    b = flat_frame(size=32)
    with pytest.raises(DimensionMismatch):
        face.block_flow(a, b, (0, 0, 16, 16))


@settings(max_examples=20, deadline=None)
@given(dx=st.integers(-5, 5), dy=st.integers(-5, 5), seed=st.integers(0, 1000))
def test_block_flow_exact_on_random_integer_translation(dx, dy, seed):
    rng = np.random.default_rng(seed)
    prev = _textured(64, rng)
    cur_px = np.full((64, 64), 128, dtype=np.uint8)
    src_y0, src_y1 = max(0, -dy), min(64, 64 - dy)
    src_x0, src_x1 = max(0, -dx), min(64, 64 - dx)
    cur_px[src_y0 + dy : src_y1 + dy, src_x0 + dx : src_x1 + dx] = prev.pixels[src_y0:src_y1, src_x0:src_x1]
    cur = Frame(cur_px)
    field = face.block_flow(prev, cur, (20, 20, 24, 24))
    assert np.all(field.vectors[..., 0] == dx)
    assert np.all(field.vectors[..., 1] == dy)


# --- characteristic_flow --------------------------------------------------------


def _const_field(dx, dy, region=(0, 0, 16, 16)):
    vecs = np.zeros((2, 2, 2))
    vecs[..., 0] = dx
    vecs[..., 1] = dy
    centers = np.zeros((2, 2, 2))
    return face.FlowField(vectors=vecs, centers=centers, region=region)


def test_characteristic_flow_zero():
    cf = face.characteristic_flow([_const_field(0, 0)] * 7)
    assert np.all(cf == 0)
    assert cf.shape == (14,)


def test_characteristic_flow_mouth_only():
    fields = [_const_field(0, 0)] * 6 + [_const_field(0, 2)]
    cf = face.characteristic_flow(fields)
    assert cf[12] == 0 and cf[13] == 2
    assert np.all(cf[:12] == 0)


def test_characteristic_flow_mean():
    vecs = np.zeros((1, 2, 2))
    vecs[0, 0] = (1, 0)
    vecs[0, 1] = (3, 0)
    mixed = face.FlowField(vectors=vecs, centers=np.zeros((1, 2, 2)), region=(0, 0, 16, 8))
    cf = face.characteristic_flow([mixed] + [_const_field(0, 0)] * 6)
    assert cf[0] == 2 and cf[1] == 0


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.1, 10), seed=st.integers(0, 100))
def test_characteristic_flow_linear(alpha, seed):
    rng = np.random.default_rng(seed)
    fields = []
    scaled = []
    for _ in range(7):
        vecs = rng.normal(size=(2, 3, 2))
        fields.append(face.FlowField(vecs, np.zeros((2, 3, 2)), (0, 0, 24, 16)))
        scaled.append(face.FlowField(alpha * vecs, np.zeros((2, 3, 2)), (0, 0, 24, 16)))
    np.testing.assert_allclose(
        face.characteristic_flow(scaled), alpha * face.characteristic_flow(fields), rtol=1e-9, atol=1e-12
    )


# --- classify_expression ----------------------------------------------------------


SMILE = np.zeros(14)
SMILE[13] = -2.0
SMILE[12] = 0.0
FROWN = np.zeros(14)
FROWN[13] = 2.0
FROWN[1] = 0.5
REFS = [("Smile", SMILE), ("Frown", FROWN)]


def test_expression_exact_copy():
    assert face.classify_expression(SMILE.copy(), REFS) == "Smile"


def test_expression_zero_vector_neutral():
    assert face.classify_expression(np.zeros(14), REFS) == "Neutral"


def test_expression_scaled_reference():
    # 0.5x frown still has norm above the magnitude gate and cosine 1
    assert face.classify_expression(0.5 * FROWN, REFS) == "Frown"


def test_expression_empty_refs():
    with pytest.raises(face.EmptyReferenceSet):
        face.classify_expression(SMILE, [])


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(1.0, 50.0))
def test_expression_scale_invariant(alpha):
    cf = SMILE * alpha
    assert face.classify_expression(cf, REFS) == face.classify_expression(SMILE, REFS)


# --- classify_motion ----------------------------------------------------------------


def _face_field(vec_fn, region=(0, 0, 64, 64), block=8):
    n = region[2] // block
    vecs = np.zeros((n, n, 2))
    centers = np.zeros((n, n, 2))
    for i in range(n):
        for j in range(n):
            cx = region[0] + j * block + (block - 1) / 2
            cy = region[1] + i * block + (block - 1) / 2
            centers[i, j] = (cx, cy)
            vecs[i, j] = vec_fn(cx, cy)
    return face.FlowField(vecs, centers, region)


def test_motion_zero_is_still():
    field = _face_field(lambda x, y: (0, 0))
    assert face.classify_motion(field, np.zeros(14)) == "Still"


def test_motion_uniform_translation_is_rigid():
    field = _face_field(lambda x, y: (4, 0))
    cf = np.tile([4.0, 0.0], 7)
    assert face.classify_motion(field, cf) == "Rigid"


def test_motion_local_flow_is_nonrigid():
    # flow only near the mouth area fails the all-zones condition
    field = _face_field(lambda x, y: (0, 6) if (24 <= x <= 40 and y >= 44) else (0, 0))
    cf = np.zeros(14)
    cf[13] = 6.0
    assert face.classify_motion(field, cf) == "NonRigid"


# --- symmetry_score -------------------------------------------------------------


def test_symmetry_mirror_face_zero():
    rng = np.random.default_rng(0)
    half = rng.integers(0, 256, size=(40, 20))
    img = np.hstack([half, half[:, ::-1]]).astype(np.uint8)
    frame = frame_from(img)
    s = face.symmetry_score(frame, face.FaceRect(0, 0, 40, 40))
    assert s == 0.0


def test_symmetry_maximal():
    img = np.zeros((40, 40), dtype=np.uint8)
    img[:, 20:] = 255
    s = face.symmetry_score(frame_from(img), face.FaceRect(0, 0, 40, 40))
    assert s == 1.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 500))
def test_symmetry_invariant_under_mirror(seed):
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, size=(32, 32)).astype(np.uint8)
    rect = face.FaceRect(0, 0, 32, 32)
    s1 = face.symmetry_score(frame_from(img), rect)
    s2 = face.symmetry_score(frame_from(img[:, ::-1]), rect)
    assert abs(s1 - s2) < 1e-12


# --- edge_cog_offset ---------------------------------------------------------------


def test_edge_cog_uniform_rect_zero():
    assert face.edge_cog_offset(flat_frame(), face.FaceRect(8, 8, 40, 40)) == 0.0


def test_edge_cog_single_left_edge():
    # step edge between columns 9 and 10 of a 41-wide rect: the two responding
    # columns are 9 and 10, each with equal magnitude -> CoG at 9.5.
    # With rect half-width (41-1)/2 = 20, e = (9.5 - 20)/20 = -0.525.
    img = np.zeros((41, 41), dtype=np.uint8)
    img[:, 10:] = 200
    e = face.edge_cog_offset(frame_from(img), face.FaceRect(0, 0, 41, 41))
    assert abs(e - (9.5 - 20.0) / 20.0) < 1e-9


def test_edge_cog_sign_positive_for_right_mass():
    img = np.zeros((41, 41), dtype=np.uint8)
    img[:, 30:] = 200
    e = face.edge_cog_offset(frame_from(img), face.FaceRect(0, 0, 41, 41))
    assert e > 0.4


# --- fuse_orientation ---------------------------------------------------------------


def test_fuse_perfect_frontal():
    est = face.fuse_orientation(0.0, 0.0)
    assert est.label == "Frontal" and est.confidence == 1.0


def test_fuse_both_cues_right():
    assert face.fuse_orientation(0.9, 0.8).label == "Right"


def test_fuse_edge_cue_wins_on_disagreement():
    est = face.fuse_orientation(0.02, 0.9)
    assert est.label == "Right"


def test_fuse_hysteresis_on_silent_edge():
    est = face.fuse_orientation(0.5, 0.0, prev_label="Left")
    assert est.label == "Left"


@settings(max_examples=50, deadline=None)
@given(s=st.floats(0, 1), e=st.floats(-1, 1), prev=st.sampled_from(["Left", "Frontal", "Right"]))
def test_fuse_is_pure(s, e, prev):
    a = face.fuse_orientation(s, e, prev)
    b = face.fuse_orientation(s, e, prev)
    assert a == b


# --- estimate_jerk -------------------------------------------------------------------


def _track_from(fn, n=5):
    t = face.HeadTrack()
    for i in range(n):
        t.push(fn(i), 0.0)
    return t


def test_jerk_constant_zero():
    assert face.estimate_jerk(_track_from(lambda i: 5.0)) == 0.0


def test_jerk_cubic_zero():
    assert face.estimate_jerk(_track_from(lambda i: i**3)) < 1e-9


def test_jerk_quartic_24():
    assert abs(face.estimate_jerk(_track_from(lambda i: i**4)) - 24.0) < 1e-9


def test_jerk_insufficient_history():
    with pytest.raises(face.InsufficientHistory):
        face.estimate_jerk(_track_from(lambda i: i, n=4))


@settings(max_examples=30, deadline=None)
@given(coeffs=st.lists(st.floats(-10, 10), min_size=4, max_size=4), n=st.integers(5, 12))
def test_jerk_annihilates_cubics(coeffs, n):
    a, b, c, d = coeffs
    track = _track_from(lambda i: a + b * i + c * i**2 + d * i**3, n=n)
    assert face.estimate_jerk(track) < 1e-9 * max(1.0, sum(abs(x) for x in coeffs))
