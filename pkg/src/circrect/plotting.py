"""Figures written next to CSV reports."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def savefig(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_prediction(records, path) -> Path:
    """Grouped bars: prediction PSNR per view pair, one bar per predictor."""
    pairs = list(dict.fromkeys(r.pair for r in records))
    preds = list(dict.fromkeys(r.predictor for r in records))
    width = 0.8 / max(len(preds), 1)
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(pairs) + 2), 3.5))
    x = np.arange(len(pairs))
    for k, pred in enumerate(preds):
        vals = {r.pair: r.psnr_db for r in records if r.predictor == pred}
        ys = [vals.get(p, math.nan) for p in pairs]
        ys = [math.nan if math.isinf(v) else v for v in ys]
        ax.bar(x + (k - (len(preds) - 1) / 2) * width, ys, width, label=pred)
    ax.set_xticks(x)
    ax.set_xticklabels(pairs)
    ax.set_xlabel("view pair")
    ax.set_ylabel("prediction PSNR [dB]")
    ax.legend(frameon=False, fontsize="small")
    return savefig(fig, path)


def plot_rig(cams, circle, path, snapped=None) -> Path:
    """Top view of camera centers and the fitted circle."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    t = np.linspace(0, 2 * np.pi, 361)
    ax.plot(circle.x_cen + circle.r * np.sin(t), circle.z_cen + circle.r * np.cos(t),
            color="0.6", lw=0.8)
    C = np.array([c.center for c in cams])
    ax.plot(C[:, 0], C[:, 2], "o", ms=5, label="original")
    if snapped is not None:
        S = np.asarray(snapped)
        ax.plot(S[:, 0], S[:, 1], "o", ms=4, label="on circle")
    ax.plot([circle.x_cen], [circle.z_cen], "+", color="k")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.legend(frameon=False, fontsize="small")
    return savefig(fig, path)


def plot_benchmark(rec, path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 3))
    labels = ["circular", "full 4x4", "full 4x4\n(cached M)"]
    ax.bar(labels, [rec.ns_circular, rec.ns_full, rec.ns_full_cached], color=["C2", "C0", "C1"])
    ax.set_ylabel("median time per point [ns]")
    ax.set_title(f"speedup {rec.ratio:.1f}x (in-encoder reference: {rec.reference_ratio:.0f}x)",
                 fontsize="small")
    return savefig(fig, path)
