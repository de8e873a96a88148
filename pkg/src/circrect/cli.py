"""Command-line interface: ``circrect <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .errors import CircRectError, StageError

DEFAULT_SEED = 0


def _cmd_fit_circle(args):
    from .circle import camera_angle, fit_circle, snap_to_circle
    from .io import load_cameras

    cams = load_cameras(args.cameras)
    res = fit_circle([(c.center[0], c.center[2]) for c in cams])
    c = res.circle
    print(f"x_cen={c.x_cen!r} z_cen={c.z_cen!r} r={c.r!r}")
    print(f"residual={res.residual:.6e} iterations={res.iterations}")
    if args.report:
        snapped = []
        with open(args.report, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["id", "x", "z", "x_snapped", "z_snapped", "alpha", "radial_error"])
            for cam, d in zip(cams, res.per_camera_distance):
                s = snap_to_circle((cam.center[0], cam.center[2]), c)
                snapped.append(s)
                w.writerow([cam.id, repr(float(cam.center[0])), repr(float(cam.center[2])),
                            repr(s[0]), repr(s[1]), repr(camera_angle(s, c)), repr(d)])
        from .plotting import plot_rig

        plot_rig(cams, c, Path(args.report).with_suffix(".png"), snapped)


def _cmd_rectify(args):
    from .io import load_cameras, save_cameras, save_rectified
    from .rectify import rectify_rig

    cams = load_cameras(args.cameras)
    rig = rectify_rig(cams, args.ox_policy, args.ox_target)
    save_rectified(rig, args.out_circular)
    save_cameras(rig.full_params, args.out_full)
    print(f"circle x_cen={rig.circle.x_cen:.6f} z_cen={rig.circle.z_cen:.6f} r={rig.circle.r:.6f}")
    print(f"{len(rig.cameras)} cameras rectified (o_x policy: {rig.ox_policy})")


def _cmd_warp(args):
    from .io import load_cameras, load_rectified, read_view, write_depth16, write_yuv420
    from .warp import fill_holes, warp_view

    cams = {c.id: c for c in load_cameras(args.cameras)}
    rect = {c.id: c for c in load_rectified(args.rectified).full_params}
    if args.view not in cams or args.view not in rect:
        raise StageError("warp", f"view {args.view} missing from camera files")
    src = cams[args.view]
    z_near = src.z_near if src.z_near is not None else args.z_near
    z_far = src.z_far if src.z_far is not None else args.z_far
    if z_near is None or z_far is None:
        raise StageError("load", "depth range unknown: set z_near/z_far in the camera file")
    frame = read_view(args.texture, args.depth, src.width, src.height, z_near, z_far, args.frame)
    warped = warp_view(frame, src, rect[args.view])
    out = fill_holes(warped) if args.fill_holes else warped.frame
    write_yuv420(args.out, [(out.luma, out.chroma_u, out.chroma_v)])
    if args.out_depth:
        write_depth16(args.out_depth, [out.depth])
    print(f"hole_fraction={warped.hole_fraction:.6f}")


def _cmd_predict(args):
    from .experiment import default_config, run_experiment

    if args.config:
        path = Path(args.config)
        config = json.loads(path.read_text())
        base = path.parent
    else:
        config, base = default_config(), Path(".")
    if args.seed is not None:
        config["seed"] = args.seed
    rep = run_experiment(config, args.out, base)
    for r in rep.records:
        psnr = "inf" if math.isinf(r.psnr_db) else f"{r.psnr_db:.3f}"
        print(f"{r.sequence} {r.pair} {r.predictor:9s} psnr={psnr} dB holes={r.hole_fraction:.4f}")


def _cmd_bench(args):
    from .evaluation import benchmark_projection
    from .plotting import plot_benchmark
    from .projection import CircularPair
    from .rectify import CircularCameraParams

    a = CircularCameraParams(0, 500.0, 320.0, 240.0, 0.0, 5.0, 640, 480)
    b = CircularCameraParams(1, 500.0, 330.0, 240.0, math.radians(10.0), 5.0, 640, 480)
    rec = benchmark_projection(CircularPair(a, b), args.points, args.reps, args.seed)
    if rec is None:
        print("no points: nothing to time")
        return
    cols = ["n_points", "repetitions", "ns_circular", "ns_full", "ns_full_cached",
            "ratio", "reduction_pct", "ratio_cached", "reference_ratio"]
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        w.writerow([repr(getattr(rec, c)) for c in cols])
    plot_benchmark(rec, Path(args.out).with_suffix(".png"))
    print(f"circular {rec.ns_circular:.1f} ns/pt, full {rec.ns_full:.1f} ns/pt, "
          f"ratio {rec.ratio:.2f}x ({rec.reduction_pct:.2f}%), reference {rec.reference_ratio:.0f}x")


def _cmd_synth(args):
    from dataclasses import replace

    from .io import load_rig_spec, load_scene_spec, save_cameras, write_view
    from .synth import default_scene, render, synth_rig

    spec = load_rig_spec(args.rig_spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    scene = load_scene_spec(args.scene_spec) if args.scene_spec else default_scene()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cams = synth_rig(spec)
    save_cameras(cams, out / "cameras.json")
    for cam in cams:
        write_view(render(scene, cam), out / f"view{cam.id}_texture.yuv", out / f"view{cam.id}_depth.raw")
    print(f"wrote {len(cams)} views to {out}")


def _cmd_bd_rate(args):
    from .evaluation import bd_rate
    from .io import load_rd_curve

    r = bd_rate(load_rd_curve(args.anchor), load_rd_curve(args.test))
    print(f"BD-rate: {r:.2f}%")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circrect", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fit-circle", help="fit the rig circle to camera centers")
    s.add_argument("--cameras", required=True)
    s.add_argument("--report", help="per-camera CSV; a top-view PNG is written next to it")
    s.set_defaults(func=_cmd_fit_circle)

    s = sub.add_parser("rectify", help="circularly rectify a rig")
    s.add_argument("--cameras", required=True)
    s.add_argument("--out-circular", required=True)
    s.add_argument("--out-full", required=True)
    s.add_argument("--ox-policy", choices=["convergence", "circle-center"], default="convergence")
    s.add_argument("--ox-target", choices=["principal", "image-center"], default="principal")
    s.set_defaults(func=_cmd_rectify)

    s = sub.add_parser("warp", help="warp one view onto its rectified camera")
    s.add_argument("--cameras", required=True)
    s.add_argument("--rectified", required=True)
    s.add_argument("--texture", required=True)
    s.add_argument("--depth", required=True)
    s.add_argument("--view", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--out-depth")
    s.add_argument("--frame", type=int, default=0)
    s.add_argument("--fill-holes", action="store_true")
    s.add_argument("--z-near", type=float)
    s.add_argument("--z-far", type=float)
    s.set_defaults(func=_cmd_warp)

    s = sub.add_parser("predict", help="run the prediction experiment")
    s.add_argument("--config", help="experiment JSON (default: bundled synthetic config)")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, help="override the config seed")
    s.set_defaults(func=_cmd_predict)

    s = sub.add_parser("bench", help="time circular vs 4x4 projection per point")
    s.add_argument("--points", type=int, default=1_000_000)
    s.add_argument("--reps", type=int, default=9)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(func=_cmd_bench)

    s = sub.add_parser("synth", help="generate a synthetic rig and rendered views")
    s.add_argument("--rig-spec", required=True)
    s.add_argument("--scene-spec", help="scene JSON (default: built-in scene)")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--seed", type=int, help="override the rig-spec seed")
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("bd-rate", help="Bjontegaard delta rate between two RD CSVs")
    s.add_argument("--anchor", required=True)
    s.add_argument("--test", required=True)
    s.set_defaults(func=_cmd_bd_rate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(f"error [{args.command}] {exc}", file=sys.stderr)
        return 1
    except (CircRectError, ValueError, OSError) as exc:
        print(f"error [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
