"""End-to-end experiment: synthesize or load views, rectify, predict, report."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import CircRectError, FormatError, StageError
from .evaluation import PREDICTORS, PROXY_NOTE, PredictionRecord, predict_view
from .projection import CircularPair
from .rectify import RectifiedRig, rectify_rig
from .synth import default_scene, render, synth_rig
from .warp import fill_holes, warp_view

CSV_COLUMNS = ("sequence", "pair", "predictor", "sse", "psnr_db", "hole_fraction", "ns_per_point")
TIMING_COLUMNS = ("ns_per_point",)
_CONFIG_KEYS = {
    "sequence", "seed", "rig", "scene", "external", "pairs", "predictors",
    "ox_policy", "rectified_views", "fill_holes",
}


@dataclass
class Report:
    records: list[PredictionRecord]
    config: dict
    rig: RectifiedRig | None = None
    paths: dict = field(default_factory=dict)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(
            exc, (CircRectError, ValueError, OSError, KeyError)
        ):
            raise StageError(self.name, exc) from exc
        return False


def default_config() -> dict:
    path = Path(__file__).with_name("data") / "default_config.json"
    return json.loads(path.read_text())


def _pairs(spec, ids):
    if spec == "neighbors":
        return list(zip(ids[:-1], ids[1:]))
    return [tuple(p) for p in spec]


def _load_external(ext: dict, base: Path):
    from .io import load_cameras, read_view

    cams = load_cameras(base / ext["cameras"], ext.get("repair_rotation", False))
    by_id = {c.id: c for c in cams}
    frames = {}
    for v in ext["views"]:
        cam = by_id[v["id"]]
        for key in ("texture", "depth"):
            if not (base / v[key]).exists():
                raise FileNotFoundError(f"{key} file for view {v['id']} not found: {v[key]}")
        frames[cam.id] = read_view(base / v["texture"], base / v["depth"], cam.width, cam.height,
                                   cam.z_near, cam.z_far, ext.get("frame", 0))
    return cams, frames


def run_experiment(config: dict, out_csv=None, base_dir=None, figure: bool = True) -> Report:
    """Run rectification, warping and every prediction arm; write reports.

    Timing columns vary between runs; everything else is deterministic for
    a fixed config.
    """
    from .io import rig_spec_from_dict, scene_spec_from_dict

    base = Path(base_dir or ".")
    with _Stage("config"):
        unknown = set(config) - _CONFIG_KEYS
        if unknown:
            raise FormatError("config", f"unknown field(s): {', '.join(sorted(unknown))}")
        sequence = config.get("sequence", "synthetic")
        predictors = config.get("predictors", list(PREDICTORS))
        for p in predictors:
            if p not in PREDICTORS:
                raise FormatError("config.predictors", f"unknown predictor {p!r}")
        ox_policy = config.get("ox_policy", "convergence")
        views_mode = config.get("rectified_views", "warp")
        if views_mode not in ("warp", "render"):
            raise FormatError("config.rectified_views", "must be 'warp' or 'render'")

    scene = None
    if "external" in config:
        with _Stage("load"):
            cams, frames = _load_external(config["external"], base)
        if views_mode == "render":
            raise StageError("config", "rectified_views='render' needs a synthetic scene")
    else:
        with _Stage("synth"):
            rig_spec = rig_spec_from_dict(config.get("rig", {}), "config.rig")
            if config.get("seed") is not None:
                rig_spec = replace(rig_spec, seed=config["seed"])
            scene = (scene_spec_from_dict(config["scene"], "config.scene")
                     if "scene" in config else default_scene())
            cams = synth_rig(rig_spec)
        with _Stage("render"):
            frames = {c.id: render(scene, c) for c in cams}

    with _Stage("rectify"):
        rig = rectify_rig(cams, ox_policy)
    with _Stage("warp"):
        rect_frames = {}
        for cam, full in zip(cams, rig.full_params):
            if views_mode == "render":
                rect_frames[cam.id] = render(scene, full)
                continue
            warped = warp_view(frames[cam.id], cam, full)
            rect_frames[cam.id] = fill_holes(warped) if config.get("fill_holes", True) else warped.frame

    with _Stage("predict"):
        by_id = {c.id: (c, f) for c, f in zip(rig.cameras, rig.full_params)}
        records = []
        for a, b in _pairs(config.get("pairs", "neighbors"), [c.id for c in cams]):
            (ca, fa), (cb, fb) = by_id[a], by_id[b]
            pair = CircularPair(ca, cb)
            for pred in predictors:
                records.append(predict_view(rect_frames[a], rect_frames[b], fa, fb, pred, pair, sequence))

    report = Report(records, config, rig)
    if out_csv is not None:
        with _Stage("report"):
            out_csv = Path(out_csv)
            out_csv.parent.mkdir(parents=True, exist_ok=True)
            write_report_csv(records, out_csv)
            json_path = out_csv.with_suffix(".json")
            write_report_json(records, config, json_path)
            report.paths = {"csv": out_csv, "json": json_path}
            if figure:
                from .plotting import plot_prediction

                report.paths["figure"] = plot_prediction(records, out_csv.with_suffix(".png"))
    return report


def _fmt(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def write_report_csv(records, path) -> None:
    with open(path, "w", newline="") as f:
        f.write(f"# {PROXY_NOTE}\n")
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def read_report_csv(path) -> list[dict]:
    from .io import _read_csv_rows

    rows = _read_csv_rows(path)
    if rows and tuple(rows[0].keys()) != CSV_COLUMNS:
        raise FormatError(str(path), f"unexpected columns {tuple(rows[0].keys())}")
    out = []
    for r in rows:
        out.append({
            "sequence": r["sequence"], "pair": r["pair"], "predictor": r["predictor"],
            "sse": int(r["sse"]), "psnr_db": float(r["psnr_db"]),
            "hole_fraction": float(r["hole_fraction"]), "ns_per_point": float(r["ns_per_point"]),
        })
    return out


def _json_safe(d: dict) -> dict:
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}


def write_report_json(records, config, path) -> None:
    doc = {
        "note": PROXY_NOTE,
        "columns": list(CSV_COLUMNS),
        "config": config,
        "records": [_json_safe(asdict(r)) for r in records],
    }
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")


def read_report_json(path) -> list[PredictionRecord]:
    doc = json.loads(Path(path).read_text())
    out = []
    for r in doc["records"]:
        r = dict(r)
        r["psnr_db"] = float(r["psnr_db"])
        out.append(PredictionRecord(**r))
    return out
