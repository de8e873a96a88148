"""Least-squares circle through camera positions in the ground plane."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AtCenter, CollinearCameras, DegenerateInput, NotOnCircle

MAX_ITER = 100


@dataclass(frozen=True)
class Circle:
    x_cen: float
    z_cen: float
    r: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x_cen, self.z_cen, self.r)):
            raise ValueError("non-finite circle parameters")
        if self.r <= 0:
            raise ValueError(f"radius must be positive, got {self.r}")


@dataclass(frozen=True)
class FitResult:
    circle: Circle
    residual: float
    iterations: int
    per_camera_distance: tuple[float, ...]


def objective(points: np.ndarray, x_cen: float, z_cen: float, r: float) -> float:
    """Sum of squared geometric distances to the circle."""
    d = np.hypot(points[:, 0] - x_cen, points[:, 1] - z_cen) - r
    return float(d @ d)


def _as_points(positions) -> np.ndarray:
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise DegenerateInput(f"expected (N, 2) or (N, 3) positions, got shape {pts.shape}")
    if pts.shape[1] == 3:
        # (x, y, z) input: heights are ignored
        pts = pts[:, [0, 2]]
    return pts


def kasa_fit(points: np.ndarray) -> Circle:
    """Algebraic fit of x^2 + z^2 + D x + E z + F = 0 by linear least squares."""
    x, z = points[:, 0], points[:, 1]
    A = np.column_stack([x, z, np.ones_like(x)])
    b = -(x * x + z * z)
    (D, E, F), *_ = np.linalg.lstsq(A, b, rcond=None)
    xc, zc = -D / 2, -E / 2
    r2 = xc * xc + zc * zc - F
    if not r2 > 0:
        raise CollinearCameras("algebraic fit produced no real circle")
    return Circle(float(xc), float(zc), float(math.sqrt(r2)))


def _check_geometry(points: np.ndarray) -> float:
    if len(points) < 3:
        raise DegenerateInput(f"need at least 3 positions, got {len(points)}")
    centered = points - points.mean(axis=0)
    diameter = float(np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1).max())
    if diameter < 1e-9:
        raise DegenerateInput("all positions coincide")
    # count distinct points (within 1e-9)
    distinct = []
    for p in points:
        if all(np.linalg.norm(p - q) > 1e-9 for q in distinct):
            distinct.append(p)
    if len(distinct) < 3:
        raise DegenerateInput(f"need at least 3 distinct positions, got {len(distinct)}")
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[1] <= 1e-12 * sv[0]:
        raise CollinearCameras("camera positions are collinear")
    return diameter


def fit_circle(positions) -> FitResult:
    """Fit a circle minimizing the sum of squared radial distances.

    Gauss-Newton on ``d_i = |p_i - c| - r`` seeded by the Kasa fit, with
    step halving whenever a full step increases the objective.
    """
    pts = _as_points(positions)
    diameter = _check_geometry(pts)
    seed = kasa_fit(pts)
    p = np.array([seed.x_cen, seed.z_cen, seed.r])
    S = objective(pts, *p)

    it = 0
    for it in range(1, MAX_ITER + 1):
        dx = pts[:, 0] - p[0]
        dz = pts[:, 1] - p[1]
        rho = np.hypot(dx, dz)
        if np.any(rho == 0):
            break
        d = rho - p[2]
        J = np.column_stack([-dx / rho, -dz / rho, -np.ones_like(rho)])
        step, *_ = np.linalg.lstsq(J, -d, rcond=None)
        t = 1.0
        while True:
            cand = p + t * step
            S_new = objective(pts, *cand) if cand[2] > 0 else math.inf
            if S_new <= S or t < 1e-10:
                break
            t *= 0.5
        if S_new > S:
            break
        p, S = cand, S_new
        if np.max(np.abs(t * step)) <= 1e-12 * (1 + abs(p[2])):
            break

    if p[2] > 1e6 * diameter:
        raise CollinearCameras(f"fitted radius {p[2]:.3g} exceeds 1e6 x rig diameter")
    circle = Circle(float(p[0]), float(p[1]), float(p[2]))
    dist = np.hypot(pts[:, 0] - circle.x_cen, pts[:, 1] - circle.z_cen) - circle.r
    return FitResult(circle, float(dist @ dist), it, tuple(float(v) for v in dist))


def snap_to_circle(pos, circle: Circle) -> tuple[float, float]:
    """Nearest point of the circle to ``pos = (x, z)``."""
    dx = pos[0] - circle.x_cen
    dz = pos[1] - circle.z_cen
    n = math.hypot(dx, dz)
    if n < 1e-9 * circle.r:
        raise AtCenter(f"position {tuple(pos)} is at the circle center")
    return circle.x_cen + circle.r * dx / n, circle.z_cen + circle.r * dz / n


def camera_angle(pos_on_circle, circle: Circle) -> float:
    """Angle with sin = (x - x_cen)/r and cos = (z - z_cen)/r, in (-pi, pi]."""
    dx = pos_on_circle[0] - circle.x_cen
    dz = pos_on_circle[1] - circle.z_cen
    if abs(math.hypot(dx, dz) - circle.r) > 1e-6 * circle.r:
        raise NotOnCircle(f"{tuple(pos_on_circle)} is not on the circle")
    a = math.atan2(dx / circle.r, dz / circle.r)
    return math.pi if a == -math.pi else a
