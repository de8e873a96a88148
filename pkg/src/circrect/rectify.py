"""Circular rectification of a camera rig.

The pipeline is strictly sequential: fit the circle, snap every camera onto
it, aim it at the circle center, then correct the intrinsics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraParams, Extrinsics, Intrinsics
from .circle import Circle, FitResult, camera_angle, fit_circle, snap_to_circle
from .errors import (
    AtCenter,
    DegenerateInput,
    NotOnCircle,
    PointBehindCamera,
    RectificationFailure,
)

OX_POLICIES = ("convergence", "circle-center")
OX_TARGETS = ("principal", "image-center")


@dataclass(frozen=True)
class CircularCameraParams:
    """Reduced per-camera parameters of a circularly rectified rig."""

    id: int
    f_x: float
    o_x: float
    o_y: float
    alpha: float
    r: float
    width: int
    height: int

    def __post_init__(self):
        if not self.f_x > 0:
            raise ValueError(f"f_x must be positive, got {self.f_x}")
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")


@dataclass(frozen=True, eq=False)
class RectifiedRig:
    circle: Circle
    cameras: tuple[CircularCameraParams, ...]
    full_params: tuple[CameraParams, ...]
    common_f_y: float
    camera_height: float
    ox_policy: str = "convergence"
    fit: FitResult | None = None

    @property
    def center3(self) -> np.ndarray:
        return np.array([self.circle.x_cen, self.camera_height, self.circle.z_cen])


def rectified_rotation(alpha: float) -> np.ndarray:
    """Rotation about the vertical axis by ``alpha``."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def world_to_camera_rotation(alpha: float) -> np.ndarray:
    """World to camera rotation of a camera at angle ``alpha`` facing the center.

    Equal to ``diag(-1, 1, -1) @ rectified_rotation(alpha).T``, i.e.
    ``rectified_rotation(pi - alpha)``. The flip turns the outward looking
    frame of ``rectified_rotation`` into one whose +z axis points at the center.
    """
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[-c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, -c]])


def position_on_circle(alpha: float, circle: Circle) -> tuple[float, float]:
    return (
        circle.x_cen + circle.r * math.sin(alpha),
        circle.z_cen + circle.r * math.cos(alpha),
    )


def circular_to_full(
    c: CircularCameraParams,
    circle: Circle,
    common_f_y: float,
    camera_height: float,
    z_near: float | None = None,
    z_far: float | None = None,
) -> CameraParams:
    x, z = position_on_circle(c.alpha, circle)
    extr = Extrinsics.from_center(world_to_camera_rotation(c.alpha), (x, camera_height, z))
    intr = Intrinsics(c.f_x, common_f_y, c.o_x, c.o_y, 0.0)
    return CameraParams(c.id, intr, extr, c.width, c.height, z_near, z_far)


def full_to_circular(cam: CameraParams, circle: Circle) -> CircularCameraParams:
    """Inverse of ``circular_to_full`` for a camera already on the circle."""
    C = cam.center
    alpha = camera_angle((C[0], C[2]), circle)
    return CircularCameraParams(
        cam.id, cam.intr.f_x, cam.intr.o_x, cam.intr.o_y, alpha, circle.r, cam.width, cam.height
    )


def convergence_point(rig) -> np.ndarray:
    """Least-squares closest point to all optical axes of ``rig``."""
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for cam in rig:
        a = cam.extr.axis
        proj = np.eye(3) - np.outer(a, a)
        A += proj
        b += proj @ cam.center
    if 1.0 / np.linalg.cond(A) < 1e-12:
        raise DegenerateInput("optical axes are parallel; no convergence point")
    return np.linalg.solve(A, b)


def _snapped(rig, circle: Circle):
    height = float(np.mean([cam.center[1] for cam in rig]))
    out = []
    for cam in rig:
        C = cam.center
        try:
            pos = snap_to_circle((C[0], C[2]), circle)
            alpha = camera_angle(pos, circle)
        except (AtCenter, NotOnCircle) as exc:
            raise RectificationFailure(cam.id, exc) from exc
        out.append(alpha)
    return out, height


def rectify_intrinsics(
    rig,
    circle: Circle,
    convergence_depth_policy: str = "convergence",
    target: str = "principal",
) -> list[Intrinsics]:
    """Zero the skew, share f_x/f_y/o_y, and choose per-camera o_x'.

    o_x' is chosen so that the point on the original principal ray at depth
    ``d_i`` lands on the ``target`` column of the rectified camera: the
    original o_x (``"principal"``) or ``width / 2`` (``"image-center"``).
    """
    if convergence_depth_policy not in OX_POLICIES:
        raise ValueError(f"unknown o_x policy {convergence_depth_policy!r}")
    if target not in OX_TARGETS:
        raise ValueError(f"unknown o_x target {target!r}")
    rig = list(rig)
    if not rig:
        raise DegenerateInput("empty rig")
    f_x = float(np.mean([cam.intr.f_x for cam in rig]))
    f_y = float(np.mean([cam.intr.f_y for cam in rig]))
    o_y = float(np.mean([cam.intr.o_y for cam in rig]))
    alphas, height = _snapped(rig, circle)
    center3 = np.array([circle.x_cen, height, circle.z_cen])
    conv = convergence_point(rig) if convergence_depth_policy == "convergence" else None

    out = []
    for cam, alpha in zip(rig, alphas):
        C, a = cam.center, cam.extr.axis
        if conv is not None:
            d = float((conv - C) @ a)
        else:
            d = float(np.linalg.norm(center3 - C))
        Q = C + d * a
        x_new, z_new = position_on_circle(alpha, circle)
        q = world_to_camera_rotation(alpha) @ (Q - np.array([x_new, height, z_new]))
        if not q[2] > 0:
            raise RectificationFailure(
                cam.id, PointBehindCamera(f"correction point has depth {q[2]:.6g}")
            )
        col = cam.intr.o_x if target == "principal" else cam.width / 2
        out.append(Intrinsics(f_x, f_y, float(col - f_x * q[0] / q[2]), o_y, 0.0))
    return out


def rectify_rig(
    rig, ox_policy: str = "convergence", ox_target: str = "principal"
) -> RectifiedRig:
    rig = list(rig)
    if len(rig) < 3:
        raise DegenerateInput(f"need at least 3 cameras, got {len(rig)}")
    fit = fit_circle([(c.center[0], c.center[2]) for c in rig])
    circle = fit.circle
    alphas, height = _snapped(rig, circle)
    intrs = rectify_intrinsics(rig, circle, ox_policy, ox_target)

    z_near = [c.z_near for c in rig if c.z_near is not None]
    z_far = [c.z_far for c in rig if c.z_far is not None]
    z_near = min(z_near) if z_near else None
    z_far = max(z_far) if z_far else None

    cams, full = [], []
    for cam, alpha, k in zip(rig, alphas, intrs):
        cc = CircularCameraParams(cam.id, k.f_x, k.o_x, k.o_y, alpha, circle.r, cam.width, cam.height)
        cams.append(cc)
        full.append(circular_to_full(cc, circle, k.f_y, height, z_near, z_far))
    return RectifiedRig(circle, tuple(cams), tuple(full), intrs[0].f_y, height, ox_policy, fit)
