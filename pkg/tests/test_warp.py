import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circrect.camera import CameraParams, Extrinsics, Intrinsics, project_points
from circrect.errors import AllInvalid
from circrect.synth import rotation_from_vector
from circrect.warp import (
    BACKGROUND_BIAS,
    ViewFrame,
    WarpedFrame,
    depth_sample_to_z,
    fill_holes,
    pixel_grid,
    round_half_down,
    splat,
    warp_view,
    z_to_depth_sample,
)


def make_frame(rng, h=16, w=24, depth=None, z_near=1.0, z_far=10.0):
    luma = rng.integers(0, 256, (h, w), dtype=np.uint8)
    u = rng.integers(0, 256, (h // 2, w // 2), dtype=np.uint8)
    v = rng.integers(0, 256, (h // 2, w // 2), dtype=np.uint8)
    if depth is None:
        depth = rng.integers(0, 65536, (h, w), dtype=np.uint16)
    return ViewFrame(luma, u, v, depth, z_near, z_far)


def simple_cam(w=24, h=16, o_x=None, R=np.eye(3), T=(0.0, 0.0, 0.0), f=20.0):
    o_x = w / 2 if o_x is None else o_x
    return CameraParams(0, Intrinsics(f, f, o_x, h / 2), Extrinsics(R, T), w, h)


def test_depth_endpoints():
    assert depth_sample_to_z(65535, 1.0, 3.0) == pytest.approx(1.0, abs=1e-15)
    assert depth_sample_to_z(0, 1.0, 3.0) == pytest.approx(3.0, abs=1e-15)
    z = depth_sample_to_z(32768, 1.0, 3.0)
    assert z == pytest.approx(1 / ((32768 / 65535) * (1 - 1 / 3) + 1 / 3), rel=1e-15)
    assert z == pytest.approx(1.49998, abs=1e-5)
    assert z_to_depth_sample(z, 1.0, 3.0) == 32768


def test_depth_round_trip_all_samples():
    v = np.arange(65536, dtype=np.uint16)
    back = z_to_depth_sample(depth_sample_to_z(v, 0.5, 40.0), 0.5, 40.0)
    np.testing.assert_array_equal(back, v)


def test_depth_clamps():
    assert z_to_depth_sample(0.1, 1.0, 3.0) == 65535
    assert z_to_depth_sample(100.0, 1.0, 3.0) == 0


def test_round_half_down():
    np.testing.assert_array_equal(round_half_down([2.5, -0.5, 2.4999, 2.5001, 3.0]), [2, -1, 2, 3, 3])


def test_identity_warp(rng):
    f = make_frame(rng)
    cam = simple_cam()
    w = warp_view(f, cam, cam)
    assert w.hole_fraction == 0.0 and w.mask.all()
    for name in ("luma", "chroma_u", "chroma_v", "depth"):
        np.testing.assert_array_equal(getattr(w.frame, name), getattr(f, name))


def test_principal_point_shift(rng):
    h, w = 16, 24
    f = make_frame(rng, h, w, depth=np.full((h, w), 40000, dtype=np.uint16))
    src = simple_cam(w, h)
    dst = simple_cam(w, h, o_x=src.intr.o_x + 10)
    out = warp_view(f, src, dst)
    # closed form: x_dst = x_src + 10 for every pixel at any depth
    np.testing.assert_array_equal(out.frame.luma[:, 10:], f.luma[:, :-10])
    np.testing.assert_array_equal(out.frame.depth[:, 10:], f.depth[:, :-10])
    assert not out.mask[:, :10].any() and out.mask[:, 10:].all()
    assert out.hole_fraction == 10 / w


def sequential_zbuffer(frame, xb, yb, zb, valid):
    h, w = frame.luma.shape
    best = {}
    for i in range(h):
        for j in range(w):
            if not valid[i, j]:
                continue
            x, y = math.ceil(xb[i, j] - 0.5), math.ceil(yb[i, j] - 0.5)
            if 0 <= x < w and 0 <= y < h:
                if (y, x) not in best or zb[i, j] < best[(y, x)][0]:
                    best[(y, x)] = (zb[i, j], i, j)
    return best


def test_zbuffer_exhaustive_replay(rng):
    for trial in range(5):
        f = make_frame(rng, 12, 16)
        src = simple_cam(16, 12)
        R = rotation_from_vector(rng.normal(scale=0.2, size=3))
        dst = simple_cam(16, 12, R=R, T=rng.normal(scale=0.5, size=3))
        xs, ys = pixel_grid(12, 16)
        xb, yb, zb, valid = project_points(src, dst, xs, ys, f.z())
        out = splat(f, xb, yb, zb, valid)
        best = sequential_zbuffer(f, xb, yb, zb, valid)
        assert out.mask.sum() == len(best)
        for (y, x), (z, i, j) in best.items():
            assert out.mask[y, x]
            assert out.frame.luma[y, x] == f.luma[i, j]
            assert out.frame.depth[y, x] == z_to_depth_sample(z, f.z_near, f.z_far)


def test_collision_keeps_nearest():
    rng = np.random.default_rng(0)
    f = make_frame(rng, 4, 4)
    xb = np.full((4, 4), 1.0)
    yb = np.full((4, 4), 2.0)
    zb = rng.uniform(1, 9, (4, 4))
    out = splat(f, xb, yb, zb, np.ones((4, 4), bool))
    i, j = np.unravel_index(np.argmin(zb), zb.shape)
    assert out.mask.sum() == 1 and out.frame.luma[2, 1] == f.luma[i, j]


def warped(luma, mask, z, z_near=1.0, z_far=11.0):
    h, w = luma.shape
    depth = z_to_depth_sample(np.asarray(z, float), z_near, z_far)
    frame = ViewFrame(np.asarray(luma, np.uint8), np.full((h // 2, w // 2), 128, np.uint8),
                      np.full((h // 2, w // 2), 128, np.uint8), depth, z_near, z_far)
    mask = np.asarray(mask, bool)
    return WarpedFrame(frame, mask, float((~mask).sum()) / mask.size)


def test_fill_full_mask_unchanged(rng):
    f = make_frame(rng, 4, 6)
    out = fill_holes(WarpedFrame(f, np.ones((4, 6), bool), 0.0))
    np.testing.assert_array_equal(out.luma, f.luma)


def test_fill_single_pixel_average():
    luma = np.array([[100, 0, 104, 0], [100, 0, 104, 0]])
    mask = np.array([[1, 0, 1, 1], [1, 0, 1, 1]])
    out = fill_holes(warped(luma, mask, np.full((2, 4), 5.0)))
    assert out.luma[0, 1] == 102 and out.luma[1, 1] == 102


def fill_row_oracle(vals, mask, z, span):
    """Scalar re-implementation of the row rule."""
    out = []
    n = len(vals)
    for j in range(n):
        if mask[j]:
            out.append(float(vals[j]))
            continue
        left = next((k for k in range(j - 1, -1, -1) if mask[k]), None)
        right = next((k for k in range(j + 1, n) if mask[k]), None)
        if left is None:
            out.append(float(vals[right]))
        elif right is None:
            out.append(float(vals[left]))
        elif abs(z[left] - z[right]) > BACKGROUND_BIAS * span:
            out.append(float(vals[left] if z[left] >= z[right] else vals[right]))
        else:
            dl, dr = j - left, right - j
            out.append((vals[left] * dr + vals[right] * dl) / (dl + dr))
    return [math.floor(v + 0.5) for v in out]


def test_fill_discontinuity_takes_far_side():
    row = [50] * 6 + [0] * 5 + [200] * 5
    mask = [1] * 6 + [0] * 5 + [1] * 5
    z = [2.0] * 6 + [5.0] * 5 + [9.0] * 5  # background on the right
    luma = np.array([row, row])
    out = fill_holes(warped(luma, [mask, mask], [z, z]))
    assert (out.luma[:, 6:11] == 200).all()
    f = warped(luma, [mask, mask], [z, z]).frame
    assert list(out.luma[0]) == fill_row_oracle(row, mask, f.z()[0], 10.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.05, 0.9))
def test_fill_matches_scalar_oracle(seed, p):
    rng = np.random.default_rng(seed)
    h, w = 6, 20
    luma = rng.integers(0, 256, (h, w))
    z = rng.choice([2.0, 2.1, 8.0], size=(h, w))
    mask = rng.uniform(size=(h, w)) > p
    mask[:, rng.integers(0, w)] = True  # every row has a valid pixel
    wf = warped(luma, mask, z)
    out = fill_holes(wf)
    zq = wf.frame.z()
    for i in range(h):
        assert list(out.luma[i]) == fill_row_oracle(luma[i], mask[i], zq[i], 10.0)
    # valid pixels never change
    np.testing.assert_array_equal(out.luma[mask], wf.frame.luma[mask])
    np.testing.assert_array_equal(out.depth[mask], wf.frame.depth[mask])


def test_fill_empty_rows_from_neighbours():
    luma = np.array([[10, 20, 30, 40], [0, 0, 0, 0], [0, 0, 0, 0], [50, 60, 70, 80]])
    mask = np.array([[1, 1, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0], [1, 1, 1, 1]])
    out = fill_holes(warped(luma, mask, np.full((4, 4), 3.0)))
    np.testing.assert_array_equal(out.luma[1], luma[0])
    np.testing.assert_array_equal(out.luma[2], luma[3])


def test_fill_all_invalid():
    with pytest.raises(AllInvalid):
        fill_holes(warped(np.zeros((2, 4)), np.zeros((2, 4)), np.full((2, 4), 3.0)))


def test_viewframe_validation(rng):
    f = make_frame(rng, 4, 6)
    with pytest.raises(ValueError):
        ViewFrame(f.luma, f.chroma_u, f.chroma_v, f.depth, 2.0, 1.0)
    with pytest.raises(ValueError):
        ViewFrame(f.luma, f.chroma_u[:1], f.chroma_v, f.depth, 1.0, 2.0)
