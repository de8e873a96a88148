"""Depth-image-based forward warping with z-buffering and hole filling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraParams, project_points
from .errors import AllInvalid

DEPTH_MAX = 65535
BACKGROUND_BIAS = 0.05


@dataclass(frozen=True, eq=False)
class ViewFrame:
    luma: np.ndarray
    chroma_u: np.ndarray
    chroma_v: np.ndarray
    depth: np.ndarray
    z_near: float
    z_far: float

    def __post_init__(self):
        if not 0 < self.z_near < self.z_far:
            raise ValueError(f"need 0 < z_near < z_far, got {self.z_near}, {self.z_far}")
        h, w = self.luma.shape
        if h % 2 or w % 2:
            raise ValueError(f"frame dimensions must be even, got {w}x{h}")
        if self.depth.shape != (h, w):
            raise ValueError(f"depth plane {self.depth.shape} does not match luma {(h, w)}")
        for name in ("chroma_u", "chroma_v"):
            if getattr(self, name).shape != (h // 2, w // 2):
                raise ValueError(f"{name} must be {(h // 2, w // 2)}")
        if self.luma.dtype != np.uint8 or self.depth.dtype != np.uint16:
            raise ValueError("luma must be uint8 and depth uint16")

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    def z(self) -> np.ndarray:
        return depth_sample_to_z(self.depth, self.z_near, self.z_far)


@dataclass(frozen=True, eq=False)
class WarpedFrame:
    frame: ViewFrame
    mask: np.ndarray
    hole_fraction: float
    n_degenerate: int = 0


def depth_sample_to_z(v, z_near: float, z_far: float):
    """Decode 16-bit samples stored linearly in inverse depth."""
    v = np.asarray(v, dtype=float)
    inv = (v / DEPTH_MAX) * (1.0 / z_near - 1.0 / z_far) + 1.0 / z_far
    z = 1.0 / inv
    return float(z) if z.ndim == 0 else z


def z_to_depth_sample(z, z_near: float, z_far: float):
    z = np.asarray(z, dtype=float)
    v = (1.0 / z - 1.0 / z_far) / (1.0 / z_near - 1.0 / z_far) * DEPTH_MAX
    v = np.clip(np.floor(v + 0.5), 0, DEPTH_MAX).astype(np.uint16)
    return int(v) if v.ndim == 0 else v


def round_half_down(x):
    """Round to nearest; exact ties go toward negative infinity."""
    return np.ceil(np.asarray(x) - 0.5)


def splat(frame: ViewFrame, xb, yb, zb, valid, z_near=None, z_far=None) -> WarpedFrame:
    """Forward splat source pixels to their destination coordinates.

    ``xb, yb, zb`` give the destination of every source pixel. The nearest
    depth wins each destination pixel; ties keep the earlier source pixel in
    raster order.
    """
    h, w = frame.luma.shape
    z_near = frame.z_near if z_near is None else z_near
    z_far = frame.z_far if z_far is None else z_far
    n_degenerate = int((~valid).sum())
    xi = round_half_down(np.where(valid, xb, -1.0))
    yi = round_half_down(np.where(valid, yb, -1.0))
    inside = valid & (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)

    src_idx = np.flatnonzero(inside)
    dst_idx = (yi.ravel()[src_idx] * w + xi.ravel()[src_idx]).astype(np.int64)
    z_hit = zb.ravel()[src_idx]
    order = np.lexsort((src_idx, z_hit, dst_idx))
    dst_sorted = dst_idx[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = dst_sorted[1:] != dst_sorted[:-1]
    win_src = src_idx[order[first]]
    win_dst = dst_sorted[first]

    mask = np.zeros(h * w, dtype=bool)
    mask[win_dst] = True

    luma = np.zeros(h * w, dtype=np.uint8)
    luma[win_dst] = frame.luma.ravel()[win_src]
    # chroma at luma resolution by sample duplication, then top-left decimation
    planes = []
    for ch in (frame.chroma_u, frame.chroma_v):
        up = np.repeat(np.repeat(ch, 2, axis=0), 2, axis=1).ravel()
        out = np.zeros(h * w, dtype=np.uint8)
        out[win_dst] = up[win_src]
        planes.append(out.reshape(h, w)[::2, ::2].copy())
    depth = np.zeros(h * w, dtype=np.uint16)
    depth[win_dst] = z_to_depth_sample(z_hit[order[first]], z_near, z_far)

    out = ViewFrame(luma.reshape(h, w), planes[0], planes[1], depth.reshape(h, w), z_near, z_far)
    mask = mask.reshape(h, w)
    return WarpedFrame(out, mask, float((~mask).sum()) / (h * w), n_degenerate)


def pixel_grid(h: int, w: int):
    ys, xs = np.mgrid[0:h, 0:w]
    return xs.astype(float), ys.astype(float)


def warp_view(src: ViewFrame, cam_src: CameraParams, cam_dst: CameraParams) -> WarpedFrame:
    """Forward-warp ``src`` from ``cam_src`` into ``cam_dst`` by full projection."""
    h, w = src.luma.shape
    if (cam_src.width, cam_src.height) != (w, h) or (cam_dst.width, cam_dst.height) != (w, h):
        raise ValueError("camera image sizes do not match the frame")
    xs, ys = pixel_grid(h, w)
    xb, yb, zb, valid = project_points(cam_src, cam_dst, xs, ys, src.z())
    return splat(src, xb, yb, zb, valid)


def _fill_plane(values: np.ndarray, mask: np.ndarray, z: np.ndarray, z_span: float) -> np.ndarray:
    """Row-wise two-sided fill with background bias; returns float plane."""
    h, w = values.shape
    cols = np.broadcast_to(np.arange(w), (h, w))
    left = np.maximum.accumulate(np.where(mask, cols, -1), axis=1)
    right = np.minimum.accumulate(np.where(mask, cols, w)[:, ::-1], axis=1)[:, ::-1]
    has_l, has_r = left >= 0, right < w
    rows = np.broadcast_to(np.arange(h)[:, None], (h, w))
    li, ri = np.clip(left, 0, w - 1), np.clip(right, 0, w - 1)
    v_l, v_r = values[rows, li].astype(float), values[rows, ri].astype(float)
    z_l, z_r = z[rows, li], z[rows, ri]
    d_l, d_r = cols - left, right - cols

    with np.errstate(divide="ignore", invalid="ignore"):
        avg = (v_l * d_r + v_r * d_l) / (d_l + d_r)
    far = np.where(z_l >= z_r, v_l, v_r)
    both = np.where(np.abs(z_l - z_r) > BACKGROUND_BIAS * z_span, far, avg)
    filled = np.where(has_l & has_r, both, np.where(has_l, v_l, v_r))
    filled = np.where(mask, values.astype(float), filled)

    row_ok = mask.any(axis=1)
    if not row_ok.all():
        good = np.flatnonzero(row_ok)
        for i in np.flatnonzero(~row_ok):
            filled[i] = filled[good[np.argmin(np.abs(good - i))]]
    return filled


def fill_holes(w: WarpedFrame) -> ViewFrame:
    """Fill masked-out pixels from the nearest valid samples on their row.

    Two valid neighbours are blended by inverse distance unless their depths
    differ by more than 5% of the depth range, in which case the farther one
    is copied. Applied to luma, chroma and depth.
    """
    f, mask = w.frame, w.mask
    if not mask.any():
        raise AllInvalid("nothing to interpolate from: every pixel is a hole")
    if mask.all():
        return f
    span = f.z_far - f.z_near
    z = f.z()
    as_u8 = lambda a: np.clip(np.floor(a + 0.5), 0, 255).astype(np.uint8)  # noqa: E731
    luma = as_u8(_fill_plane(f.luma, mask, z, span))
    cmask, cz = mask[::2, ::2], z[::2, ::2]
    if cmask.any():
        cu = as_u8(_fill_plane(f.chroma_u, cmask, cz, span))
        cv = as_u8(_fill_plane(f.chroma_v, cmask, cz, span))
    else:
        cu = np.full_like(luma[::2, ::2], 128)
        cv = cu.copy()
    depth = _fill_plane(f.depth, mask, z, span)
    depth = np.clip(np.floor(depth + 0.5), 0, 65535).astype(np.uint16)
    return ViewFrame(luma, cu, cv, depth, f.z_near, f.z_far)
