"""Prediction-quality, timing and Bjontegaard-delta evaluation."""

from __future__ import annotations

import gc
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .camera import CameraParams, ImagePoint, project_point, project_points
from .errors import IllConditioned, NoOverlap, PredictorMismatch
from .projection import (
    CircularPair,
    disparity_predict_batch,
    linear_pair_for,
    project_circular,
    project_circular_batch,
)
from .warp import ViewFrame, pixel_grid, splat

PREDICTORS = ("disparity", "circular", "full")
PROXY_NOTE = (
    "quality proxy: inter-view prediction PSNR of luma over valid pixels; "
    "codec bitrates (BD-rate) are not reproduced without an HEVC encoder"
)
# in-encoder inter-view prediction speedup reported for the circular formulas
REFERENCE_SPEEDUP = 44.0


@dataclass(frozen=True)
class PredictionRecord:
    sequence: str
    pair: str
    predictor: str
    sse: int
    n_pixels: int
    psnr_db: float
    hole_fraction: float
    ns_per_point: float


def psnr(sse: float, n: int) -> float:
    if sse == 0:
        return math.inf
    return 10.0 * math.log10(255.0**2 * n / sse)


def predict_view(
    src: ViewFrame,
    dst: ViewFrame,
    cam_a: CameraParams,
    cam_b: CameraParams,
    predictor: str,
    circular: CircularPair | None = None,
    sequence: str = "",
) -> PredictionRecord:
    """Predict view B from view A with one predictor and score it against ``dst``."""
    h, w = src.luma.shape
    xs, ys = pixel_grid(h, w)
    z = src.z()
    t0 = time.perf_counter()
    if predictor == "full":
        xb, yb, zb, valid = project_points(cam_a, cam_b, xs, ys, z)
    elif predictor == "circular":
        if circular is None:
            raise PredictorMismatch("circular predictor needs circular camera parameters")
        if (circular.cam_a.id, circular.cam_b.id) != (cam_a.id, cam_b.id):
            raise PredictorMismatch(
                f"circular pair {circular.cam_a.id}->{circular.cam_b.id} does not match "
                f"cameras {cam_a.id}->{cam_b.id}"
            )
        xb, yb, zb, valid = project_circular_batch(circular, xs, ys, z)
    elif predictor == "disparity":
        xb, yb, zb, valid = disparity_predict_batch(linear_pair_for(cam_a, cam_b), xs, ys, z)
    else:
        raise PredictorMismatch(f"unknown predictor {predictor!r}")
    elapsed = time.perf_counter() - t0

    warped = splat(src, xb, yb, zb, valid, dst.z_near, dst.z_far)
    m = warped.mask
    diff = warped.frame.luma[m].astype(np.int64) - dst.luma[m].astype(np.int64)
    sse = int(diff @ diff)
    n = int(m.sum())
    return PredictionRecord(
        sequence, f"{cam_a.id}-{cam_b.id}", predictor, sse, n, psnr(sse, n),
        warped.hole_fraction, elapsed * 1e9 / (h * w),
    )


# --------------------------------------------------------------------------
# Bjontegaard delta rate

@dataclass(frozen=True)
class RdCurve:
    bitrate: tuple[float, ...]
    psnr: tuple[float, ...]

    def __post_init__(self):
        b = np.asarray(self.bitrate, dtype=float)
        p = np.asarray(self.psnr, dtype=float)
        if b.shape != p.shape or b.ndim != 1:
            raise ValueError("bitrate and psnr must be equal-length sequences")
        if len(b) < 4:
            raise ValueError(f"an RD curve needs at least 4 points, got {len(b)}")
        if not (np.isfinite(b).all() and np.isfinite(p).all()):
            raise ValueError("RD points must be finite")
        if (b <= 0).any():
            raise ValueError("bitrates must be positive")
        if (np.diff(b) <= 0).any():
            raise ValueError("bitrates must be strictly increasing")
        object.__setattr__(self, "bitrate", tuple(float(v) for v in b))
        object.__setattr__(self, "psnr", tuple(float(v) for v in p))


def _cubic_log_rate(curve: RdCurve) -> np.ndarray:
    p = np.asarray(curve.psnr)
    A = np.vander(p, 4)
    if np.linalg.matrix_rank(A) < 4:
        raise IllConditioned("PSNR values do not determine a cubic fit")
    coef, *_ = np.linalg.lstsq(A, np.log10(curve.bitrate), rcond=None)
    return coef


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Average bitrate difference of ``test`` vs ``anchor`` in percent.

    Negative values mean the test curve needs less rate for equal PSNR.
    """
    lo = max(min(anchor.psnr), min(test.psnr))
    hi = min(max(anchor.psnr), max(test.psnr))
    if not lo < hi:
        raise NoOverlap(f"PSNR ranges do not overlap (shared interval [{lo}, {hi}])")
    ia = np.polyint(_cubic_log_rate(anchor))
    it = np.polyint(_cubic_log_rate(test))
    area_a = np.polyval(ia, hi) - np.polyval(ia, lo)
    area_t = np.polyval(it, hi) - np.polyval(it, lo)
    avg = (area_t - area_a) / (hi - lo)
    return float((10.0**avg - 1.0) * 100.0)


# --------------------------------------------------------------------------
# projection timing

@dataclass(frozen=True)
class BenchRecord:
    n_points: int
    repetitions: int
    ns_circular: float
    ns_full: float
    ns_full_cached: float
    ratio: float
    reduction_pct: float
    ratio_cached: float
    reference_ratio: float = REFERENCE_SPEEDUP


def bench_points(pair: CircularPair, n: int, seed: int = 0):
    """Random visible points of view A that stay in front of view B."""
    from .synth import SplitMix64

    rng = SplitMix64(seed)
    a = pair.cam_a
    pts = []
    while len(pts) < n:
        p = ImagePoint(
            rng.uniform() * a.width, rng.uniform() * a.height, a.r * (0.3 + 1.4 * rng.uniform())
        )
        dx = p.x - a.o_x
        z_b = dx * (p.z / a.f_x) * pair.sin_d + (p.z - a.r) * pair.cos_d + a.r
        if z_b > 0.05 * a.r:
            pts.append(p)
    return pts


def _median_ns(fns, pts, repetitions: int) -> list[float]:
    """Median ns per point of each function; arms are interleaved per repetition."""
    warm = pts[: min(len(pts), 100_000)]
    for fn in fns:
        fn(warm)  # excluded from timing
    times = [[] for _ in fns]
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repetitions):
            for fn, acc in zip(fns, times):
                t0 = time.perf_counter()
                fn(pts)
                acc.append(time.perf_counter() - t0)
    finally:
        if gc_was_enabled:
            gc.enable()
    return [statistics.median(t) * 1e9 / len(pts) for t in times]


def benchmark_projection(
    pair: CircularPair,
    n_points: int,
    repetitions: int = 9,
    seed: int = 0,
    full_pair: tuple[CameraParams, CameraParams] | None = None,
    common_f_y: float | None = None,
) -> BenchRecord | None:
    """Median per-point time of the circular formulas vs 4x4 projection.

    Returns None for ``n_points == 0``. Each repetition projects every point
    once per path and accumulates the outputs so no work can be skipped.
    """
    if n_points <= 0:
        return None
    if full_pair is None:
        from .circle import Circle
        from .rectify import circular_to_full

        circle = Circle(0.0, 0.0, pair.cam_a.r)
        f_y = pair.cam_a.f_x if common_f_y is None else common_f_y
        full_pair = (
            circular_to_full(pair.cam_a, circle, f_y, 0.0),
            circular_to_full(pair.cam_b, circle, f_y, 0.0),
        )
    cam_a, cam_b = full_pair
    pts = bench_points(pair, n_points, seed)
    sink = []

    def run_circular(points):
        acc = 0.0
        for p in points:
            acc += project_circular(pair, p).x
        sink.append(acc)

    def run_full(points):
        acc = 0.0
        for p in points:
            acc += project_point(cam_a, cam_b, p).x
        sink.append(acc)

    M = cam_b.P.P @ cam_a.P_inv.P

    def run_full_cached(points):
        acc = 0.0
        for p in points:
            v = M @ np.array((p.z * p.x, p.z * p.y, p.z, 1.0))
            acc += ImagePoint(v[0] / v[2], v[1] / v[2], v[2]).x
        sink.append(acc)

    ns_c, ns_f, ns_fc = _median_ns((run_circular, run_full, run_full_cached), pts, repetitions)
    ratio = ns_f / ns_c
    return BenchRecord(
        n_points, repetitions, ns_c, ns_f, ns_fc, ratio, (1.0 / ratio - 1.0) * 100.0, ns_fc / ns_c
    )
