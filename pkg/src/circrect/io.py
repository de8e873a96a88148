"""JSON camera/config files and raw planar video.

Camera files (``format_version`` 1)::

    {"format_version": 1,
     "translation_convention": "world-offset" | "camera-center",
     "cameras": [{"id", "width", "height", "K": [9], "R": [9], "T": [3],
                  "z_near", "z_far"}, ...]}

``R`` is always world to camera, row-major. With ``world-offset`` T is the
offset in ``X_cam = R X + T``; with ``camera-center`` T is the camera
position and is converted on load.

Raw video: texture is planar YUV 4:2:0, 8-bit, frames back to back
(``w*h`` luma bytes then two ``w/2*h/2`` chroma planes). Depth is one
16-bit little-endian plane per frame.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import fields
from pathlib import Path

import numpy as np

from .camera import CameraParams, Extrinsics, Intrinsics
from .circle import Circle
from .errors import FormatError, TruncatedFile
from .rectify import CircularCameraParams, RectifiedRig, circular_to_full
from .synth import RigSpec, SceneSpec
from .warp import ViewFrame

FORMAT_VERSION = 1
CONVENTIONS = ("world-offset", "camera-center")

_CAMERA_KEYS = {"id", "width", "height", "K", "R", "T", "z_near", "z_far"}
_CIRC_SHARED = {
    "f_x", "f_y_common", "o_y", "r", "x_cen", "z_cen", "camera_height",
    "width", "height", "z_near", "z_far", "ox_policy",
}
_CIRC_CAMERA = {"id", "o_x", "alpha"}


def _dump(obj, path) -> None:
    # json writes floats with repr(), the shortest string that round-trips
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(str(path), f"invalid JSON: {exc}") from exc


def _check_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise FormatError(where, "expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise FormatError(where, f"unknown field(s): {', '.join(sorted(unknown))}")
    missing = set(required) - set(obj)
    if missing:
        raise FormatError(where, f"missing field(s): {', '.join(sorted(missing))}")


def _num(obj, key, where, n=None):
    v = obj[key]
    if n is None:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise FormatError(f"{where}.{key}", f"expected a finite number, got {v!r}")
        return v
    if not isinstance(v, list) or len(v) != n:
        raise FormatError(f"{where}.{key}", f"expected a list of {n} numbers")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise FormatError(f"{where}.{key}[{i}]", f"expected a finite number, got {x!r}")
    return [float(x) for x in v]


def _int(obj, key, where):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(f"{where}.{key}", f"expected an integer, got {v!r}")
    return v


def _nearest_rotation(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    if np.linalg.det(out) < 0:
        U[:, -1] *= -1
        out = U @ Vt
    return out


# --------------------------------------------------------------------------
# camera files

def camera_to_dict(cam: CameraParams) -> dict:
    return {
        "id": cam.id,
        "width": cam.width,
        "height": cam.height,
        "K": [float(v) for v in cam.intr.K.ravel()],
        "R": [float(v) for v in cam.extr.R.ravel()],
        "T": [float(v) for v in cam.extr.T],
        "z_near": cam.z_near,
        "z_far": cam.z_far,
    }


def save_cameras(cams, path, convention: str = "world-offset") -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    out = []
    for cam in cams:
        d = camera_to_dict(cam)
        if convention == "camera-center":
            d["T"] = [float(v) for v in cam.center]
        out.append(d)
    _dump({"format_version": FORMAT_VERSION, "translation_convention": convention,
           "cameras": out}, path)


def parse_cameras(doc, source: str = "<cameras>", repair_rotation: bool = False) -> list[CameraParams]:
    """Build cameras from a parsed camera document with strict checking.

    ``repair_rotation`` snaps slightly non-orthonormal rotations (e.g. from
    files with few decimals) to the nearest rotation before validation.
    """
    _check_keys(doc, {"format_version", "translation_convention", "cameras"},
                {"format_version", "cameras"}, source)
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatError(f"{source}.format_version", f"unsupported version {doc['format_version']!r}")
    conv = doc.get("translation_convention", "world-offset")
    if conv not in CONVENTIONS:
        raise FormatError(f"{source}.translation_convention", f"must be one of {CONVENTIONS}")
    if not isinstance(doc["cameras"], list) or not doc["cameras"]:
        raise FormatError(f"{source}.cameras", "expected a non-empty list")

    cams = []
    for i, c in enumerate(doc["cameras"]):
        where = f"{source}.cameras[{i}]"
        _check_keys(c, _CAMERA_KEYS, _CAMERA_KEYS - {"z_near", "z_far"}, where)
        cid = _int(c, "id", where)
        where = f"{source}.cameras[{i}] (id {cid})"
        K = _num(c, "K", where, 9)
        R = np.array(_num(c, "R", where, 9)).reshape(3, 3)
        T = np.array(_num(c, "T", where, 3))
        z_near = _num(c, "z_near", where) if c.get("z_near") is not None else None
        z_far = _num(c, "z_far", where) if c.get("z_far") is not None else None
        if repair_rotation:
            R = _nearest_rotation(R)
        try:
            intr = Intrinsics.from_matrix(K)
            extr = Extrinsics.from_center(R, T) if conv == "camera-center" else Extrinsics(R, T)
            cams.append(CameraParams(cid, intr, extr, _int(c, "width", where),
                                     _int(c, "height", where), z_near, z_far))
        except ValueError as exc:
            raise FormatError(where, str(exc)) from exc
    ids = [c.id for c in cams]
    if len(set(ids)) != len(ids):
        raise FormatError(f"{source}.cameras", "duplicate camera ids")
    return cams


def load_cameras(path, repair_rotation: bool = False) -> list[CameraParams]:
    return parse_cameras(_load_json(path), str(path), repair_rotation)


# --------------------------------------------------------------------------
# circular camera files

def rectified_to_dict(rig: RectifiedRig) -> dict:
    c0 = rig.cameras[0]
    f0 = rig.full_params[0]
    return {
        "format_version": FORMAT_VERSION,
        "shared": {
            "f_x": c0.f_x,
            "f_y_common": rig.common_f_y,
            "o_y": c0.o_y,
            "r": rig.circle.r,
            "x_cen": rig.circle.x_cen,
            "z_cen": rig.circle.z_cen,
            "camera_height": rig.camera_height,
            "width": c0.width,
            "height": c0.height,
            "z_near": f0.z_near,
            "z_far": f0.z_far,
            "ox_policy": rig.ox_policy,
        },
        "cameras": [{"id": c.id, "o_x": c.o_x, "alpha": c.alpha} for c in rig.cameras],
    }


def save_rectified(rig: RectifiedRig, path) -> None:
    _dump(rectified_to_dict(rig), path)


def parse_rectified(doc, source: str = "<circular>") -> RectifiedRig:
    _check_keys(doc, {"format_version", "shared", "cameras"}, {"format_version", "shared", "cameras"}, source)
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatError(f"{source}.format_version", f"unsupported version {doc['format_version']!r}")
    sh = doc["shared"]
    where = f"{source}.shared"
    _check_keys(sh, _CIRC_SHARED, _CIRC_SHARED - {"z_near", "z_far"}, where)
    vals = {k: _num(sh, k, where) for k in ("f_x", "f_y_common", "o_y", "r", "x_cen", "z_cen", "camera_height")}
    width, height = _int(sh, "width", where), _int(sh, "height", where)
    z_near = _num(sh, "z_near", where) if sh.get("z_near") is not None else None
    z_far = _num(sh, "z_far", where) if sh.get("z_far") is not None else None
    try:
        circle = Circle(vals["x_cen"], vals["z_cen"], vals["r"])
    except ValueError as exc:
        raise FormatError(where, str(exc)) from exc
    cams, full = [], []
    for i, c in enumerate(doc["cameras"]):
        w = f"{source}.cameras[{i}]"
        _check_keys(c, _CIRC_CAMERA, _CIRC_CAMERA, w)
        try:
            cc = CircularCameraParams(_int(c, "id", w), vals["f_x"], _num(c, "o_x", w), vals["o_y"],
                                      _num(c, "alpha", w), vals["r"], width, height)
            cams.append(cc)
            full.append(circular_to_full(cc, circle, vals["f_y_common"], vals["camera_height"],
                                         z_near, z_far))
        except ValueError as exc:
            raise FormatError(w, str(exc)) from exc
    return RectifiedRig(circle, tuple(cams), tuple(full), vals["f_y_common"],
                        vals["camera_height"], sh["ox_policy"])


def load_rectified(path) -> RectifiedRig:
    return parse_rectified(_load_json(path), str(path))


# --------------------------------------------------------------------------
# rig / scene specs

def rig_spec_from_dict(d: dict, source: str = "<rig-spec>") -> RigSpec:
    names = {f.name for f in fields(RigSpec)}
    _check_keys(d, names, (), source)
    kw = dict(d)
    for key in ("center", "target"):
        if kw.get(key) is not None:
            kw[key] = tuple(kw[key])
    try:
        return RigSpec(**kw)
    except (TypeError, ValueError) as exc:
        raise FormatError(source, str(exc)) from exc


def scene_spec_from_dict(d: dict, source: str = "<scene-spec>") -> SceneSpec:
    _check_keys(d, {"primitives", "background_depth", "background_luma"}, {"primitives"}, source)
    prims = d["primitives"]
    if not isinstance(prims, list):
        raise FormatError(f"{source}.primitives", "expected a list")
    for i, p in enumerate(prims):
        if not isinstance(p, dict) or "type" not in p or "texture" not in p:
            raise FormatError(f"{source}.primitives[{i}]", "needs 'type' and 'texture'")
    return SceneSpec(tuple(prims), d.get("background_depth", 25.0), d.get("background_luma", 128))


def load_rig_spec(path) -> RigSpec:
    return rig_spec_from_dict(_load_json(path), str(path))


def save_rig_spec(spec: RigSpec, path) -> None:
    _dump(spec.to_dict(), path)


def load_scene_spec(path) -> SceneSpec:
    return scene_spec_from_dict(_load_json(path), str(path))


def save_scene_spec(spec: SceneSpec, path) -> None:
    _dump(spec.to_dict(), path)


# --------------------------------------------------------------------------
# raw planes

def _frame_count(path, frame_bytes: int) -> int:
    size = Path(path).stat().st_size
    n, rem = divmod(size, frame_bytes)
    if rem:
        raise TruncatedFile(
            f"{path}: {size} bytes is not a multiple of the {frame_bytes}-byte frame; "
            f"last complete frame ends at byte {n * frame_bytes}"
        )
    return n


def read_yuv420(path, width: int, height: int):
    """Read every frame; returns a list of (Y, U, V) uint8 arrays."""
    if width % 2 or height % 2:
        raise ValueError("4:2:0 needs even dimensions")
    ysz, csz = width * height, (width // 2) * (height // 2)
    n = _frame_count(path, ysz + 2 * csz)
    data = np.fromfile(path, dtype=np.uint8)
    frames = []
    for i in range(n):
        base = i * (ysz + 2 * csz)
        Y = data[base:base + ysz].reshape(height, width)
        U = data[base + ysz:base + ysz + csz].reshape(height // 2, width // 2)
        V = data[base + ysz + csz:base + ysz + 2 * csz].reshape(height // 2, width // 2)
        frames.append((Y, U, V))
    return frames


def write_yuv420(path, frames, append: bool = False) -> None:
    with open(path, "ab" if append else "wb") as f:
        for Y, U, V in frames:
            for plane in (Y, U, V):
                f.write(np.ascontiguousarray(plane, dtype=np.uint8).tobytes())


def read_depth16(path, width: int, height: int) -> list[np.ndarray]:
    n = _frame_count(path, 2 * width * height)
    data = np.fromfile(path, dtype="<u2").astype(np.uint16)
    return [data[i * width * height:(i + 1) * width * height].reshape(height, width) for i in range(n)]


def write_depth16(path, planes, append: bool = False) -> None:
    with open(path, "ab" if append else "wb") as f:
        for d in planes:
            f.write(np.ascontiguousarray(d, dtype="<u2").tobytes())


def read_view(texture_path, depth_path, width, height, z_near, z_far, frame: int = 0) -> ViewFrame:
    tex = read_yuv420(texture_path, width, height)
    dep = read_depth16(depth_path, width, height)
    if frame >= len(tex) or frame >= len(dep):
        raise TruncatedFile(f"frame {frame} not present ({len(tex)} texture, {len(dep)} depth frames)")
    Y, U, V = tex[frame]
    return ViewFrame(Y.copy(), U.copy(), V.copy(), dep[frame].copy(), z_near, z_far)


def write_view(frame: ViewFrame, texture_path, depth_path, append: bool = False) -> None:
    write_yuv420(texture_path, [(frame.luma, frame.chroma_u, frame.chroma_v)], append)
    write_depth16(depth_path, [frame.depth], append)


# --------------------------------------------------------------------------
# RD curves and report CSVs

def load_rd_curve(path):
    from .evaluation import RdCurve

    rows = _read_csv_rows(path)
    try:
        pts = sorted((float(r["bitrate_kbps"]), float(r["psnr_db"])) for r in rows)
    except KeyError as exc:
        raise FormatError(str(path), f"missing column {exc}") from exc
    return RdCurve(tuple(p[0] for p in pts), tuple(p[1] for p in pts))


def save_rd_curve(curve, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bitrate_kbps", "psnr_db"])
        for b, p in zip(curve.bitrate, curve.psnr):
            w.writerow([repr(b), repr(p)])


def _read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))
