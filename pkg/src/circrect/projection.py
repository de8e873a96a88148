"""Simplified inter-view projection for circularly rectified cameras.

For two cameras on the same circle that share ``f_x`` and ``o_y`` and look
at the circle center, a pixel ``(x_A, y_A)`` at depth ``z_A`` in view A maps
into view B (``d = alpha_B - alpha_A``) as::

    z_B = (x_A - o_xA) * (z_A / f_x) * sin(d) + (z_A - r) * cos(d) + r
    y_B = o_y + (z_A / z_B) * (y_A - o_y)
    x_B = o_xB + ((x_A - o_xA) * z_A * cos(d) - (z_A - r) * f_x * sin(d)) / z_B

``z_B`` must be evaluated first since both other coordinates divide by it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import ImagePoint
from .errors import BehindCamera, PredictorMismatch
from .rectify import CircularCameraParams

Z_GUARD = 1e-9


@dataclass(frozen=True)
class CircularPair:
    cam_a: CircularCameraParams
    cam_b: CircularCameraParams
    dalpha: float = field(init=False)
    sin_d: float = field(init=False, repr=False)
    cos_d: float = field(init=False, repr=False)
    consts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a, b = self.cam_a, self.cam_b
        if (a.f_x, a.o_y, a.r) != (b.f_x, b.o_y, b.r):
            raise PredictorMismatch(
                f"cameras {a.id} and {b.id} do not share f_x, o_y and r"
            )
        d = b.alpha - a.alpha
        object.__setattr__(self, "dalpha", d)
        object.__setattr__(self, "sin_d", math.sin(d))
        object.__setattr__(self, "cos_d", math.cos(d))
        object.__setattr__(
            self, "consts", (a.o_x, b.o_x, a.o_y, a.f_x, a.r, self.sin_d, self.cos_d)
        )


@dataclass(frozen=True)
class LinearPair:
    """Parameters of the rectified-linear disparity predictor."""

    f_x: float
    t_x: float
    ox_shift: float = 0.0


def project_circular(pair: CircularPair, p: ImagePoint) -> ImagePoint:
    ox_a, ox_b, o_y, f_x, r, s, c = pair.consts
    x, y, z = p
    if not z > 0:
        raise ValueError(f"source depth must be positive, got {z}")
    dx = x - ox_a
    dz = z - r
    z_b = dx * (z / f_x) * s + dz * c + r
    if z_b <= Z_GUARD * r:
        raise BehindCamera(f"point maps to depth {z_b}")
    y_b = o_y + (z / z_b) * (y - o_y)
    x_b = ox_b + (dx * z * c - dz * f_x * s) / z_b
    return ImagePoint(x_b, y_b, z_b)


def project_circular_batch(pair: CircularPair, x, y, z):
    """Elementwise ``project_circular``; returns ``(x, y, z, valid)``.

    Uses the same operation order as the scalar path so the results are
    bitwise identical. Invalid entries are NaN.
    """
    a = pair.cam_a
    f_x, r = a.f_x, a.r
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    dx = x - a.o_x
    dz = z - r
    z_b = dx * (z / f_x) * pair.sin_d + dz * pair.cos_d + r
    valid = (z > 0) & (z_b > Z_GUARD * r)
    with np.errstate(divide="ignore", invalid="ignore"):
        y_b = a.o_y + (z / z_b) * (y - a.o_y)
        x_b = pair.cam_b.o_x + (dx * z * pair.cos_d - dz * f_x * pair.sin_d) / z_b
    nan = np.nan
    return np.where(valid, x_b, nan), np.where(valid, y_b, nan), np.where(valid, z_b, nan), valid


def disparity_predict(pair: LinearPair, p: ImagePoint) -> ImagePoint:
    """Classic rectified-linear prediction: a pure horizontal disparity."""
    if not p.z > 0:
        raise ValueError(f"source depth must be positive, got {p.z}")
    return ImagePoint(p.x + pair.f_x * pair.t_x / p.z + pair.ox_shift, p.y, p.z)


def disparity_predict_batch(pair: LinearPair, x, y, z):
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    valid = z > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        xb = x + pair.f_x * pair.t_x / z + pair.ox_shift
    return np.where(valid, xb, np.nan), np.where(valid, y, np.nan), np.where(valid, z, np.nan), valid


def linear_pair_for(cam_a, cam_b) -> LinearPair:
    """Disparity parameters for two full cameras, ignoring their rotation.

    ``t_x`` is the x component, in camera B, of the A to B translation.
    """
    R_rel = cam_b.extr.R @ cam_a.extr.R.T
    t = cam_b.extr.T - R_rel @ cam_a.extr.T
    return LinearPair(cam_a.intr.f_x, float(t[0]), cam_b.intr.o_x - cam_a.intr.o_x)
