import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from circrect.camera import CameraParams, Extrinsics, ImagePoint, Intrinsics, project_point
from circrect.circle import Circle
from circrect.errors import BehindCamera, PredictorMismatch
from circrect.projection import (
    CircularPair,
    LinearPair,
    disparity_predict,
    linear_pair_for,
    project_circular,
    project_circular_batch,
)
from circrect.rectify import CircularCameraParams, circular_to_full

CIRCLE = Circle(0.5, -1.0, 5.0)


def cam(cid, alpha, o_x=320.0, f_x=500.0, o_y=240.0, r=5.0):
    return CircularCameraParams(cid, f_x, o_x, o_y, alpha, r, 640, 480)


def full(c, f_y=520.0, h=0.3):
    return circular_to_full(c, Circle(CIRCLE.x_cen, CIRCLE.z_cen, c.r), f_y, h)


angles = st.floats(-math.pi, math.pi)
offsets = st.floats(-1.2, 1.2)
oxs = st.floats(200, 440)
points = st.tuples(st.floats(0, 640), st.floats(0, 480), st.floats(1.0, 9.0))


def test_zero_rotation_identity():
    pair = CircularPair(cam(0, 0.4), cam(1, 0.4))
    p = ImagePoint(123.25, 77.5, 3.75)
    assert project_circular(pair, p) == p


@pytest.mark.parametrize("d", [-2.0, -0.3, 0.0, 0.17, 1.0, 2.5])
def test_circle_center_maps_to_principal_column(d):
    a, b = cam(0, 0.2, o_x=310.0), cam(1, 0.2 + d, o_x=333.0)
    q = project_circular(CircularPair(a, b), ImagePoint(310.0, 99.0, 5.0))
    assert abs(q.z - 5.0) <= 1e-9 and abs(q.x - 333.0) <= 1e-9 and abs(q.y - 99.0) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(alpha=angles, d=offsets, ox_a=oxs, ox_b=oxs, p=points)
def test_equivalence_with_full_projection(alpha, d, ox_a, ox_b, p):
    a, b = cam(0, alpha, ox_a), cam(1, alpha + d, ox_b)
    p = ImagePoint(*p)
    try:
        ref = project_point(full(a), full(b), p)
    except BehindCamera:
        return
    assume(ref.z > 1e-3)
    q = project_circular(CircularPair(a, b), p)
    assert abs(q.x - ref.x) <= 1e-6 and abs(q.y - ref.y) <= 1e-6
    assert abs(q.z - ref.z) <= 1e-6 * ref.z


@settings(max_examples=200, deadline=None)
@given(alpha=angles, d1=offsets, d2=offsets, p=points)
def test_composition_around_circle(alpha, d1, d2, p):
    a, b, c = cam(0, alpha, 300.0), cam(1, alpha + d1, 330.0), cam(2, alpha + d1 + d2, 315.0)
    p = ImagePoint(*p)
    try:
        mid = project_circular(CircularPair(a, b), p)
        via = project_circular(CircularPair(b, c), mid)
        direct = project_circular(CircularPair(a, c), p)
    except BehindCamera:
        return
    assume(min(mid.z, direct.z) > 0.05)
    assert abs(via.x - direct.x) <= 1e-5 and abs(via.y - direct.y) <= 1e-5


@settings(max_examples=200, deadline=None)
@given(alpha=angles, d=offsets, p=points)
def test_inverse(alpha, d, p):
    a, b = cam(0, alpha, 300.0), cam(1, alpha + d, 340.0)
    p = ImagePoint(*p)
    try:
        q = project_circular(CircularPair(a, b), p)
    except BehindCamera:
        return
    assume(q.z > 0.05)
    back = project_circular(CircularPair(b, a), q)
    assert abs(back.x - p.x) <= 1e-6 and abs(back.y - p.y) <= 1e-6


def test_behind_camera_raised():
    # a point far behind the center seen from the opposite side of the circle
    pair = CircularPair(cam(0, 0.0), cam(1, math.pi))
    with pytest.raises(BehindCamera):
        project_circular(pair, ImagePoint(320.0, 240.0, 10.5))


def test_pair_requires_shared_parameters():
    with pytest.raises(PredictorMismatch):
        CircularPair(cam(0, 0.0, f_x=500.0), cam(1, 0.1, f_x=501.0))


def test_batch_bitwise_equal_to_scalar():
    rng = np.random.default_rng(2)
    pair = CircularPair(cam(0, 0.1, 305.5), cam(1, 1.9, 331.0))
    ys, xs = np.mgrid[0:48, 0:64].astype(float)
    xs, ys = xs * 10, ys * 10
    zs = rng.uniform(0.5, 11.0, xs.shape)
    xb, yb, zb, valid = project_circular_batch(pair, xs, ys, zs)
    assert (~valid).any() and valid.any()
    for idx in np.ndindex(xs.shape):
        p = ImagePoint(float(xs[idx]), float(ys[idx]), float(zs[idx]))
        try:
            q = project_circular(pair, p)
        except BehindCamera:
            assert not valid[idx]
            continue
        assert valid[idx]
        assert (xb[idx], yb[idx], zb[idx]) == q


def test_batch_constant_input():
    pair = CircularPair(cam(0, 0.0), cam(1, 0.3))
    p = ImagePoint(100.0, 50.0, 4.0)
    xb, yb, zb, valid = project_circular_batch(pair, np.full(9, p.x), np.full(9, p.y), np.full(9, p.z))
    q = project_circular(pair, p)
    assert valid.all() and (xb == q.x).all() and (yb == q.y).all() and (zb == q.z).all()


def test_disparity_basic():
    p = ImagePoint(10.0, 20.0, 100.0)
    assert disparity_predict(LinearPair(1000.0, 0.0), p) == p
    q = disparity_predict(LinearPair(1000.0, 0.1), p)
    assert q.x == pytest.approx(11.0, abs=1e-12) and q.y == 20.0 and q.z == 100.0


def test_disparity_matches_full_projection_on_linear_rig():
    intr_a = Intrinsics(800.0, 800.0, 320.0, 240.0)
    intr_b = Intrinsics(800.0, 800.0, 310.0, 240.0)
    a = CameraParams(0, intr_a, Extrinsics(np.eye(3), (0.0, 0.0, 0.0)), 640, 480)
    b = CameraParams(1, intr_b, Extrinsics(np.eye(3), (-0.25, 0.0, 0.0)), 640, 480)
    lin = linear_pair_for(a, b)
    rng = np.random.default_rng(4)
    for _ in range(100):
        p = ImagePoint(rng.uniform(0, 640), rng.uniform(0, 480), rng.uniform(1, 20))
        q, ref = disparity_predict(lin, p), project_point(a, b, p)
        assert abs(q.x - ref.x) <= 1e-6 and abs(q.y - ref.y) <= 1e-6 and abs(q.z - ref.z) <= 1e-9
