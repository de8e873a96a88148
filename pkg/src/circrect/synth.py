"""Deterministic synthetic rigs and ray-traced scenes.

Randomness comes from SplitMix64 (Steele, Lea & Flood 2014) so rigs are
reproducible in any language::

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

all arithmetic modulo 2**64. Uniforms are ``(out >> 11) * 2**-53``; normals
use Box-Muller with the cosine branch only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .camera import CameraParams, Extrinsics, Intrinsics
from .warp import ViewFrame, z_to_depth_sample

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def normal(self) -> float:
        u1, u2 = self.uniform(), self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class RigSpec:
    n_cameras: int = 8
    radius: float = 5.0
    center: tuple[float, float] = (0.0, 0.0)
    arc_span: float = 2 * math.pi
    arc_center: float = 0.0
    position_noise: float = 0.0
    rotation_noise: float = 0.0
    seed: int = 0
    camera_height: float = 0.0
    target: tuple[float, float, float] | None = None
    f_x: float = 500.0
    f_y: float = 500.0
    o_x: float = 320.0
    o_y: float = 240.0
    skew: float = 0.0
    width: int = 640
    height: int = 480
    z_near: float = 1.0
    z_far: float = 30.0

    def __post_init__(self):
        if self.n_cameras < 3:
            raise ValueError("n_cameras must be at least 3")
        if not 0 < self.arc_span <= 2 * math.pi:
            raise ValueError("arc_span must be in (0, 2*pi]")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def rig_angles(spec: RigSpec) -> list[float]:
    n = spec.n_cameras
    if spec.arc_span >= 2 * math.pi - 1e-12:
        step = spec.arc_span / n
        return [spec.arc_center + i * step for i in range(n)]
    step = spec.arc_span / (n - 1)
    return [spec.arc_center - spec.arc_span / 2 + i * step for i in range(n)]


def look_at(center, target, up=(0.0, 1.0, 0.0)) -> np.ndarray:
    """World to camera rotation whose +z axis points from center to target."""
    z = np.asarray(target, dtype=float) - np.asarray(center, dtype=float)
    z /= np.linalg.norm(z)
    x = np.cross(up, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.array([x, y, z])


def rotation_from_vector(w) -> np.ndarray:
    """Rodrigues formula for a rotation vector."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    if theta == 0:
        return np.eye(3)
    k = w / theta
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(theta) * Kx + (1 - math.cos(theta)) * (Kx @ Kx)


def synth_rig(spec: RigSpec) -> list[CameraParams]:
    """Cameras at equally spaced angles, aimed at ``spec.target`` (or the center)."""
    rng = SplitMix64(spec.seed)
    xc, zc = spec.center
    target = spec.target or (xc, spec.camera_height, zc)
    intr = Intrinsics(spec.f_x, spec.f_y, spec.o_x, spec.o_y, spec.skew)
    cams = []
    for i, a in enumerate(rig_angles(spec)):
        pos = np.array([
            xc + spec.radius * math.sin(a),
            spec.camera_height,
            zc + spec.radius * math.cos(a),
        ])
        noise = [rng.normal() for _ in range(6)]
        pos += spec.position_noise * np.array(noise[:3])
        R = look_at(pos, target)
        if spec.rotation_noise:
            R = rotation_from_vector(spec.rotation_noise * np.array(noise[3:])) @ R
        cams.append(
            CameraParams(i, intr, Extrinsics.from_center(R, pos), spec.width, spec.height,
                         spec.z_near, spec.z_far)
        )
    return cams


# --------------------------------------------------------------------------
# scenes

@dataclass(frozen=True)
class SceneSpec:
    """Textured primitives, described as plain dicts (JSON friendly).

    Primitive kinds: ``sphere`` (center, radius), ``dome`` (a sphere seen
    from inside), ``plane`` (point, normal, optional disk ``radius``) and
    ``box`` (min, max corners). Each carries a ``texture`` dict and an
    optional ``tint`` ``[u, v]`` for chroma.
    """

    primitives: tuple = field(default_factory=tuple)
    background_depth: float = 25.0
    background_luma: int = 128

    def to_dict(self) -> dict:
        return {
            "primitives": [dict(p) for p in self.primitives],
            "background_depth": self.background_depth,
            "background_luma": self.background_luma,
        }


def default_scene() -> SceneSpec:
    return SceneSpec(primitives=(
        {"type": "dome", "center": [0.0, 0.0, 0.0], "radius": 14.0,
         "texture": {"kind": "noise", "seed": 11, "mean": 120, "amplitude": 60, "scale": 0.6},
         "tint": [118, 136]},
        {"type": "plane", "point": [0.0, -1.5, 0.0], "normal": [0.0, 1.0, 0.0], "radius": 13.0,
         "texture": {"kind": "noise", "seed": 5, "mean": 100, "amplitude": 50, "scale": 1.0},
         "tint": [128, 120]},
        {"type": "sphere", "center": [0.3, -0.2, 0.6], "radius": 0.9,
         "texture": {"kind": "noise", "seed": 3, "mean": 160, "amplitude": 60, "scale": 2.0},
         "tint": [100, 150]},
        {"type": "box", "min": [-2.0, -1.5, -1.2], "max": [-0.8, 0.3, 0.0],
         "texture": {"kind": "gradient", "direction": [0.3, 0.5, 0.2], "scale": 40.0, "offset": 90.0},
         "tint": [150, 110]},
        {"type": "sphere", "center": [1.6, 0.4, -1.6], "radius": 0.7,
         "texture": {"kind": "checker", "size": 0.5, "low": 90, "high": 150},
         "tint": [128, 128]},
    ))


def _texture(spec: dict, P: np.ndarray) -> np.ndarray:
    kind = spec["kind"]
    if kind == "checker":
        s = spec["size"]
        parity = np.floor(P / s).astype(np.int64).sum(axis=-1) % 2
        return np.where(parity == 0, float(spec["low"]), float(spec["high"]))
    if kind == "gradient":
        d = np.asarray(spec["direction"], dtype=float)
        return spec.get("offset", 128.0) + spec["scale"] * (P @ d)
    if kind == "noise":
        # sum of seeded random plane waves: smooth and deterministic
        rng = SplitMix64(spec["seed"])
        out = np.zeros(P.shape[:-1])
        n = spec.get("waves", 6)
        for _ in range(n):
            w = np.array([rng.normal() for _ in range(3)]) * spec["scale"]
            phase = 2 * math.pi * rng.uniform()
            out += np.sin(P @ w + phase)
        return spec["mean"] + spec["amplitude"] * out / math.sqrt(n)
    if kind == "constant":
        return np.full(P.shape[:-1], float(spec["value"]))
    raise ValueError(f"unknown texture kind {kind!r}")


def _intersect(prim: dict, C: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Ray parameters of the first hit (inf if none). Rays are C + t*D."""
    kind = prim["type"]
    inf = np.inf
    if kind in ("sphere", "dome"):
        S = np.asarray(prim["center"], dtype=float)
        oc = C - S
        a = np.einsum("...i,...i", D, D)
        b = 2 * (D @ oc)
        c = oc @ oc - prim["radius"] ** 2
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.maximum(disc, 0))
        t0 = (-b - sq) / (2 * a)
        t1 = (-b + sq) / (2 * a)
        if kind == "dome":
            t = np.where(t1 > 0, t1, inf)
        else:
            t = np.where(t0 > 0, t0, np.where(t1 > 0, t1, inf))
        return np.where(disc >= 0, t, inf)
    if kind == "plane":
        P0 = np.asarray(prim["point"], dtype=float)
        n = np.asarray(prim["normal"], dtype=float)
        denom = D @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((P0 - C) @ n) / denom
        t = np.where((np.abs(denom) > 1e-12) & (t > 0), t, inf)
        if "radius" in prim:
            hit = C + np.where(np.isfinite(t), t, 0)[..., None] * D
            t = np.where(np.linalg.norm(hit - P0, axis=-1) <= prim["radius"], t, inf)
        return t
    if kind == "box":
        lo = np.asarray(prim["min"], dtype=float)
        hi = np.asarray(prim["max"], dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / D
            t_a = (lo - C) * inv
            t_b = (hi - C) * inv
        t_a = np.nan_to_num(t_a, nan=-inf)
        t_b = np.nan_to_num(t_b, nan=inf)
        t_near = np.minimum(t_a, t_b).max(axis=-1)
        t_far = np.maximum(t_a, t_b).min(axis=-1)
        hit = (t_near <= t_far) & (t_far > 0)
        return np.where(hit, np.where(t_near > 0, t_near, t_far), inf)
    raise ValueError(f"unknown primitive type {kind!r}")


def render(scene: SceneSpec, cam: CameraParams) -> ViewFrame:
    """Ray trace one ray per pixel center; ray parameter equals depth."""
    h, w = cam.height, cam.width
    k = cam.intr
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    Yc = (ys - k.o_y) / k.f_y
    Xc = (xs - k.o_x - k.c * Yc) / k.f_x
    d_cam = np.stack([Xc, Yc, np.ones_like(Xc)], axis=-1)
    D = d_cam @ cam.extr.R  # camera to world direction, z component = 1 in camera
    C = cam.center

    t_best = np.full((h, w), np.inf)
    idx = np.full((h, w), -1)
    for i, prim in enumerate(scene.primitives):
        t = _intersect(prim, C, D)
        closer = t < t_best
        t_best = np.where(closer, t, t_best)
        idx = np.where(closer, i, idx)

    luma = np.full((h, w), float(scene.background_luma))
    u = np.full((h, w), 128.0)
    v = np.full((h, w), 128.0)
    P = C + np.where(np.isfinite(t_best), t_best, 0)[..., None] * D
    for i, prim in enumerate(scene.primitives):
        sel = idx == i
        if not sel.any():
            continue
        luma[sel] = _texture(prim["texture"], P[sel])
        tint = prim.get("tint", [128, 128])
        u[sel], v[sel] = tint
    z = np.where(np.isfinite(t_best), t_best, scene.background_depth)

    z_near = cam.z_near if cam.z_near is not None else 0.1
    z_far = cam.z_far if cam.z_far is not None else 1.5 * scene.background_depth
    to_u8 = lambda a: np.clip(np.floor(a + 0.5), 0, 255).astype(np.uint8)  # noqa: E731
    return ViewFrame(
        to_u8(luma), to_u8(u[::2, ::2]), to_u8(v[::2, ::2]),
        z_to_depth_sample(z, z_near, z_far), z_near, z_far,
    )
