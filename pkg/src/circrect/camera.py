"""Pinhole camera model and exact point correspondence between views.

Convention used throughout the package:

* world to camera: ``X_cam = R @ X_world + T``; the camera looks down +z;
* pixel ``x = f_x*X/Z + c*Y/Z + o_x`` and ``y = f_y*Y/Z + o_y``;
* depth ``z`` is the coordinate along the optical axis, not the ray length;
* the camera center is ``C = -R.T @ T``.

With this convention the 4x4 projection matrix is literally the block
product ``[[K, 0], [0, 1]] @ [[R, T], [0, 1]]`` and maps the homogeneous
world point to ``(Z*x, Z*y, Z, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import BehindCamera, SingularProjection

ORTHO_TOL = 1e-9
RCOND_MIN = 1e-12


@dataclass(frozen=True)
class Intrinsics:
    f_x: float
    f_y: float
    o_x: float
    o_y: float
    c: float = 0.0

    def __post_init__(self):
        vals = (self.f_x, self.f_y, self.o_x, self.o_y, self.c)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite intrinsics: {vals}")
        if self.f_x <= 0 or self.f_y <= 0:
            raise ValueError(f"focal lengths must be positive, got {self.f_x}, {self.f_y}")

    @property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.f_x, self.c, self.o_x], [0.0, self.f_y, self.o_y], [0.0, 0.0, 1.0]]
        )

    @classmethod
    def from_matrix(cls, K) -> Intrinsics:
        K = np.asarray(K, dtype=float).reshape(3, 3)
        if K[1, 0] != 0 or K[2, 0] != 0 or K[2, 1] != 0 or K[2, 2] != 1:
            raise ValueError("K must be upper triangular with K[2,2] = 1")
        return cls(float(K[0, 0]), float(K[1, 1]), float(K[0, 2]), float(K[1, 2]), float(K[0, 1]))


def check_rotation(R: np.ndarray, tol: float = ORTHO_TOL) -> None:
    err = np.abs(R.T @ R - np.eye(3)).max()
    if err > tol:
        raise ValueError(f"rotation is not orthonormal (max error {err:.3g})")
    det = np.linalg.det(R)
    if abs(det - 1.0) > tol:
        raise ValueError(f"rotation determinant is {det:.6g}, expected 1")


@dataclass(frozen=True, eq=False)
class Extrinsics:
    """World to camera pose. ``R`` is 3x3, ``T`` a 3-vector."""

    R: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float).reshape(3, 3)
        T = np.array(self.T, dtype=float).reshape(3)
        if not (np.isfinite(R).all() and np.isfinite(T).all()):
            raise ValueError("non-finite extrinsics")
        check_rotation(R)
        R.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "T", T)

    @classmethod
    def from_center(cls, R, center) -> Extrinsics:
        R = np.asarray(R, dtype=float)
        return cls(R, -R @ np.asarray(center, dtype=float))

    @property
    def center(self) -> np.ndarray:
        return -self.R.T @ self.T

    @property
    def axis(self) -> np.ndarray:
        """Optical axis direction in world coordinates."""
        return self.R[2].copy()


@dataclass(frozen=True, eq=False)
class CameraParams:
    id: int
    intr: Intrinsics
    extr: Extrinsics
    width: int
    height: int
    z_near: float | None = field(default=None)
    z_far: float | None = field(default=None)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"camera {self.id}: image size must be positive")

    @property
    def center(self) -> np.ndarray:
        return self.extr.center

    @cached_property
    def P(self) -> ProjectionMatrix:
        return build_projection(self)

    @cached_property
    def P_inv(self) -> ProjectionMatrix:
        return invert_projection(self.P)

    def world_to_image(self, X) -> np.ndarray:
        """Project world points (..., 3) to (..., 3) arrays of (x, y, z)."""
        X = np.asarray(X, dtype=float)
        cam = X @ self.extr.R.T + self.extr.T
        Z = cam[..., 2]
        k = self.intr
        x = (k.f_x * cam[..., 0] + k.c * cam[..., 1]) / Z + k.o_x
        y = k.f_y * cam[..., 1] / Z + k.o_y
        return np.stack([x, y, Z], axis=-1)

    def image_to_world(self, x, y, z) -> np.ndarray:
        k = self.intr
        Y = (np.asarray(y, dtype=float) - k.o_y) * z / k.f_y
        X = ((np.asarray(x, dtype=float) - k.o_x) * z - k.c * Y) / k.f_x
        cam = np.stack(np.broadcast_arrays(X, Y, np.asarray(z, dtype=float)), axis=-1)
        return (cam - self.extr.T) @ self.extr.R


class ProjectionMatrix:
    """Validated 4x4 projection matrix (read-only array in ``.P``)."""

    __slots__ = ("P",)

    def __init__(self, P):
        P = np.array(P, dtype=float).reshape(4, 4)
        if not (P[3] == (0.0, 0.0, 0.0, 1.0)).all():
            raise ValueError(f"bottom row must be (0, 0, 0, 1), got {P[3]}")
        if not np.isfinite(P).all():
            raise ValueError("non-finite projection matrix")
        if 1.0 / np.linalg.cond(P) < RCOND_MIN:
            raise SingularProjection("projection matrix is numerically singular")
        P.setflags(write=False)
        self.P = P

    def __array__(self, dtype=None, copy=None):
        return self.P if dtype is None else self.P.astype(dtype)

    def __repr__(self):
        return f"ProjectionMatrix({self.P.tolist()})"


class ImagePoint(NamedTuple):
    x: float
    y: float
    z: float


def build_projection(cam: CameraParams) -> ProjectionMatrix:
    K4 = np.eye(4)
    K4[:3, :3] = cam.intr.K
    RT = np.eye(4)
    RT[:3, :3] = cam.extr.R
    RT[:3, 3] = cam.extr.T
    return ProjectionMatrix(K4 @ RT)


def invert_projection(P: ProjectionMatrix) -> ProjectionMatrix:
    M = np.asarray(P)
    if 1.0 / np.linalg.cond(M) < RCOND_MIN:
        raise SingularProjection("cannot invert a singular projection matrix")
    inv = np.linalg.inv(M)
    # the bottom row of an affine inverse is exactly (0, 0, 0, 1)
    inv[3] = (0.0, 0.0, 0.0, 1.0)
    return ProjectionMatrix(inv)


def relative_projection(src: CameraParams, dst: CameraParams) -> np.ndarray:
    """``P_dst @ P_src^-1``, the 4x4 matrix mapping src image+depth to dst."""
    return dst.P.P @ src.P_inv.P


def project_point(src: CameraParams, dst: CameraParams, p: ImagePoint) -> ImagePoint:
    """Map a pixel with depth from ``src`` into ``dst`` through 4x4 matrices."""
    if not p.z > 0:
        raise ValueError(f"source depth must be positive, got {p.z}")
    M = dst.P.P @ src.P_inv.P
    v = M @ np.array((p.z * p.x, p.z * p.y, p.z, 1.0))
    if abs(v[3] - 1.0) > 1e-9:
        raise SingularProjection(f"homogeneous coordinate drifted to {v[3]}")
    z = float(v[2])
    if z <= 0:
        raise BehindCamera(f"point maps to depth {z} in camera {dst.id}")
    return ImagePoint(float(v[0]) / z, float(v[1]) / z, z)


def project_points(src: CameraParams, dst: CameraParams, x, y, z):
    """Vectorized ``project_point``; returns ``(x, y, z, valid)`` arrays.

    Invalid entries (non-positive source or destination depth) are NaN.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
    M = relative_projection(src, dst)
    zx, zy = z * x, z * y
    X = M[0, 0] * zx + M[0, 1] * zy + M[0, 2] * z + M[0, 3]
    Y = M[1, 0] * zx + M[1, 1] * zy + M[1, 2] * z + M[1, 3]
    Z = M[2, 0] * zx + M[2, 1] * zy + M[2, 2] * z + M[2, 3]
    valid = (z > 0) & (Z > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        xb = np.where(valid, X / Z, np.nan)
        yb = np.where(valid, Y / Z, np.nan)
    return xb, yb, np.where(valid, Z, np.nan), valid
