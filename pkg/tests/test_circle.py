import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circrect.circle import Circle, camera_angle, fit_circle, kasa_fit, objective, snap_to_circle
from circrect.errors import AtCenter, CollinearCameras, DegenerateInput, NotOnCircle


def circle_points(xc, zc, r, n, span=2 * math.pi, start=0.0):
    t = start + np.arange(n) * (span / n if span >= 2 * math.pi else span / (n - 1))
    return np.column_stack([xc + r * np.sin(t), zc + r * np.cos(t)])


def grid_search(points, guess, half_width, levels=14, n=21):
    """Independent oracle: iterative zoom of a dense (x_cen, z_cen, r) grid."""
    best = np.asarray(guess, dtype=float)
    hw = np.asarray(half_width, dtype=float)
    for _ in range(levels):
        axes = [np.linspace(best[k] - hw[k], best[k] + hw[k], n) for k in range(3)]
        X, Z, R = np.meshgrid(*axes, indexing="ij")
        rho = np.hypot(points[:, 0, None, None, None] - X, points[:, 1, None, None, None] - Z)
        S = ((rho - R) ** 2).sum(axis=0)
        i = np.unravel_index(np.argmin(S), S.shape)
        best = np.array([X[i], Z[i], R[i]])
        hw = hw * 0.3
    return best, objective(points, *best)


def test_three_points_exact():
    res = fit_circle([(1, 0), (0, 1), (-1, 0)])
    c = res.circle
    assert abs(c.x_cen) < 1e-12 and abs(c.z_cen) < 1e-12 and abs(c.r - 1) < 1e-12
    assert res.residual <= 1e-18


def test_zero_noise_recovery():
    res = fit_circle(circle_points(1.0, -2.0, 5.0, 8))
    c = res.circle
    assert max(abs(c.x_cen - 1), abs(c.z_cen + 2), abs(c.r - 5)) <= 1e-9
    assert res.residual <= 1e-15


@pytest.mark.parametrize("span", [2 * math.pi, math.pi / 3])
def test_noisy_fit_matches_grid_oracle(span):
    rng = np.random.default_rng(42)
    pts = circle_points(1.0, -2.0, 5.0, 8, span) + rng.normal(scale=0.01, size=(8, 2))
    res = fit_circle(pts)
    c = res.circle
    assert max(abs(c.x_cen - 1), abs(c.z_cen + 2), abs(c.r - 5)) <= 0.05
    _, S_grid = grid_search(pts, (1.0, -2.0, 5.0), (0.5, 0.5, 0.5))
    assert res.residual <= S_grid + 1e-10
    assert abs(res.residual - S_grid) <= 1e-10


def test_gradient_vanishes_at_solution():
    rng = np.random.default_rng(5)
    pts = circle_points(0.0, 0.0, 3.0, 10) + rng.normal(scale=0.05, size=(10, 2))
    res = fit_circle(pts)
    c = res.circle
    dx, dz = pts[:, 0] - c.x_cen, pts[:, 1] - c.z_cen
    rho = np.hypot(dx, dz)
    d = rho - c.r
    grad = 2 * np.array([(-dx / rho) @ d, (-dz / rho) @ d, -d.sum()])
    assert np.abs(grad).max() <= 1e-8 * (1 + res.residual)


def test_residual_recomputed():
    rng = np.random.default_rng(9)
    pts = circle_points(2.0, 1.0, 4.0, 6) + rng.normal(scale=0.1, size=(6, 2))
    res = fit_circle(pts)
    c = res.circle
    S = sum((math.hypot(x - c.x_cen, z - c.z_cen) - c.r) ** 2 for x, z in pts)
    assert abs(res.residual - S) <= 1e-12 * S
    assert len(res.per_camera_distance) == 6


def test_three_dimensional_input_ignores_height():
    pts2 = circle_points(0.0, 0.0, 2.0, 5)
    pts3 = np.column_stack([pts2[:, 0], np.linspace(-1, 1, 5), pts2[:, 1]])
    assert fit_circle(pts3).circle == fit_circle(pts2).circle


@pytest.mark.parametrize("pts, err", [
    ([(0, 0), (1, 1)], DegenerateInput),
    ([(0, 0), (0, 0), (1, 1)], DegenerateInput),
    ([(2, 2)] * 4, DegenerateInput),
    ([(0, 0), (1, 1), (2, 2), (3, 3)], CollinearCameras),
])
def test_degenerate_inputs(pts, err):
    with pytest.raises(err):
        fit_circle(pts)


def test_refinement_never_worse_than_kasa():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pts = circle_points(0.0, 0.0, 5.0, 8, math.pi / 2) + rng.normal(scale=0.2, size=(8, 2))
        k = kasa_fit(pts)
        assert fit_circle(pts).residual <= objective(pts, k.x_cen, k.z_cen, k.r) + 1e-15


@settings(max_examples=40, deadline=None)
@given(
    tx=st.floats(-100, 100), tz=st.floats(-100, 100), s=st.floats(0.01, 100),
    seed=st.integers(0, 2**31),
)
def test_similarity_equivariance(tx, tz, s, seed):
    rng = np.random.default_rng(seed)
    pts = circle_points(0.3, -0.4, 2.0, 7) + rng.normal(scale=0.05, size=(7, 2))
    base = fit_circle(pts).circle
    moved = fit_circle(pts * s + (tx, tz)).circle
    scale = s * base.r + abs(tx) + abs(tz)
    assert abs(moved.x_cen - (base.x_cen * s + tx)) <= 1e-9 * scale
    assert abs(moved.z_cen - (base.z_cen * s + tz)) <= 1e-9 * scale
    assert abs(moved.r - base.r * s) <= 1e-9 * s * base.r


def test_snap():
    c = Circle(1.0, 2.0, 3.0)
    assert snap_to_circle((1.0, 5.0), c) == (1.0, 5.0)
    assert snap_to_circle((7.0, 2.0), c) == (4.0, 2.0)
    with pytest.raises(AtCenter):
        snap_to_circle((1.0, 2.0), c)


@settings(max_examples=60)
@given(x=st.floats(-50, 50), z=st.floats(-50, 50))
def test_snap_on_circle_and_idempotent(x, z):
    c = Circle(1.0, 2.0, 3.0)
    if math.hypot(x - 1, z - 2) < 1e-6:
        return
    s = snap_to_circle((x, z), c)
    assert abs(math.hypot(s[0] - 1, s[1] - 2) - 3.0) <= 1e-12 * 3.0
    s2 = snap_to_circle(s, c)
    assert abs(s2[0] - s[0]) <= 1e-12 and abs(s2[1] - s[1]) <= 1e-12


def test_camera_angle_cardinal():
    c = Circle(1.0, 2.0, 3.0)
    assert camera_angle((1.0, 5.0), c) == 0.0
    assert abs(camera_angle((4.0, 2.0), c) - math.pi / 2) <= 1e-15
    assert camera_angle((1.0, -1.0), c) == math.pi
    with pytest.raises(NotOnCircle):
        camera_angle((1.0, 2.5), c)


def test_camera_angle_round_trip():
    rng = np.random.default_rng(3)
    c = Circle(-1.0, 0.5, 2.5)
    for a0 in rng.uniform(-math.pi, math.pi, 200):
        pos = (c.x_cen + c.r * math.sin(a0), c.z_cen + c.r * math.cos(a0))
        assert abs(camera_angle(pos, c) - a0) <= 1e-12
