"""Command-line surface: simulate, train, detect, track, eval, plot.

Exit codes: 0 success, 2 validation error, 3 numerical failure.  Output
files are written atomically and contain no timestamps, so re-running a
command on identical inputs reproduces identical bytes.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import fileio
from .cfta import cfta_unit, coarse_step, fine_histogram, triangle_threshold
from .dmd import DMDConfig
from .errors import NumericalError, PolarBGError, ValidationError
from .evaluation import (count_metrics, format_count_table, format_point_table,
                         point_metrics)
from .frames import SensorConfig
from .model import train_background_model
from .pipeline import FusionMode, PipelineConfig, build_roi_mask, detect_frame
from .plots import histogram_svg, matrix_to_pgm, trajectories_svg
from .sim import Scene, simulate
from .tracking import Tracker, TrackerConfig, count_movements, extract_trajectories


def default_sensor_config() -> SensorConfig:
    """16-beam desk-scale sensor with elevations clustered near the horizon."""
    elevations = (-10.0, -8.0, -6.0, -5.0, -4.0, -3.0, -2.4, -1.9,
                  -1.5, -1.2, -0.9, -0.6, -0.3, 0.0, 1.0, 3.0)
    return SensorConfig(beam_count=16, elevations=elevations)


def _load_run_config(path: str):
    """Read {sensor: ..., dmd: ...} or a bare sensor config document."""
    d = fileio.read_json(path)
    if "sensor" in d:
        sensor = SensorConfig.from_dict(d["sensor"])
        dmd = DMDConfig(**d.get("dmd", {}))
    else:
        sensor = SensorConfig.from_dict(d)
        dmd = DMDConfig()
    return sensor, dmd


def cmd_simulate(args) -> int:
    scene = Scene.from_dict(fileio.read_json(args.scene))
    if args.sensor:
        cfg = fileio.read_sensor_config(args.sensor)
    else:
        cfg = default_sensor_config()
    frames, truth = simulate(scene, args.n_frames, cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    fileio.write_frames_csv(frames, cfg, os.path.join(args.out_dir, "frames.csv"))
    fileio.write_labels_csv(truth.labels, os.path.join(args.out_dir, "gt_labels.csv"))
    fileio.write_tracks_csv(fileio.truth_trajectories(truth),
                            os.path.join(args.out_dir, "gt_tracks.csv"),
                            status="truth")
    fileio.write_sensor_config(cfg, os.path.join(args.out_dir, "sensor.json"))
    return 0


def cmd_train(args) -> int:
    sensor, dmd_cfg = _load_run_config(args.config)
    frames = fileio.read_frames_csv(args.frames, sensor)
    model = train_background_model(frames, sensor, dmd_cfg)
    fileio.write_model_json(model, args.model)
    return 0


def cmd_detect(args) -> int:
    model = fileio.read_model_json(args.model)
    cfg = model.sensor
    frames = fileio.read_frames_csv(args.frames, cfg)
    roi = None
    if args.roi != "-":
        roi = build_roi_mask(fileio.read_roi_json(args.roi), cell_size=0.5)
    pcfg = PipelineConfig(fusion_mode=FusionMode(args.fusion))
    detections, foreground = [], []
    for frame in frames:
        result = detect_frame(frame, model, roi, cfg, pcfg)
        detections.append(result.detections)
        foreground.append((frame.frame_id, result.points))
    os.makedirs(args.out_dir, exist_ok=True)
    fileio.write_detections_csv(detections,
                                os.path.join(args.out_dir, "detections.csv"))
    fileio.write_foreground_csv(foreground,
                                os.path.join(args.out_dir, "foreground.csv"))
    return 0


def cmd_track(args) -> int:
    per_frame = fileio.read_detections_csv(args.detections)
    zones = fileio.read_zones_json(args.zones)
    tracker = Tracker(TrackerConfig(dt=1.0 / args.frame_rate))
    for fid in sorted(per_frame):
        tracker.step(per_frame[fid], fid)
    trajectories = extract_trajectories(tracker)
    counts, unclassified = count_movements(trajectories, zones)
    os.makedirs(args.out_dir, exist_ok=True)
    fileio.write_tracks_csv(trajectories, os.path.join(args.out_dir, "tracks.csv"))
    fileio.write_counts_json(counts, unclassified,
                             os.path.join(args.out_dir, "counts.json"))
    return 0


def cmd_eval(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    if args.mode == "points":
        if not args.frames or not args.sensor:
            raise ValidationError("points mode needs --frames and --sensor")
        cfg = fileio.read_sensor_config(args.sensor)
        frames = fileio.read_frames_csv(args.frames, cfg)
        labels = fileio.read_labels_csv(args.truth, frames)
        fg = fileio.read_foreground_csv(args.predictions)
        masks = []
        for frame in frames:
            mask = np.zeros(frame.shape, dtype=bool)
            for p in fg.get(frame.frame_id, []):
                mask[p.beam, p.bin] = True
            masks.append(mask)
        bands = point_metrics(masks, labels, [f.ranges for f in frames])
        fileio.write_json(os.path.join(args.out_dir, "metrics.json"),
                          {"points": [b.to_dict() for b in bands]})
        fileio.atomic_write_text(os.path.join(args.out_dir, "metrics.txt"),
                                 format_point_table(bands))
    else:
        if not args.zones:
            raise ValidationError("counts mode needs --zones")
        zones = fileio.read_zones_json(args.zones)
        pred_counts, _ = fileio.read_counts_json(args.predictions)
        truth_trajs = fileio.read_tracks_csv(args.truth)
        truth_counts, _ = count_movements(truth_trajs, zones)
        metrics = count_metrics(pred_counts, truth_counts)
        payload = {
            "counts": {
                "->".join(k): {"predicted": m.predicted, "truth": m.truth,
                               "error_rate": m.error_rate, "accuracy": m.accuracy}
                for k, m in metrics["per_movement"].items()},
            "total": {"predicted": metrics["total"].predicted,
                      "truth": metrics["total"].truth,
                      "error_rate": metrics["total"].error_rate,
                      "accuracy": metrics["total"].accuracy},
        }
        fileio.write_json(os.path.join(args.out_dir, "metrics.json"), payload)
        fileio.atomic_write_text(os.path.join(args.out_dir, "metrics.txt"),
                                 format_count_table(metrics))
    return 0


def cmd_plot(args) -> int:
    if args.kind == "stmap":
        if not args.model:
            raise ValidationError("stmap plots need --model")
        model = fileio.read_model_json(args.model)
        cfg = model.sensor
        frames = fileio.read_frames_csv(args.inputs[0], cfg)
        from .frames import INTENSITY, build_st_matrices
        st = build_st_matrices(frames, args.beam, INTENSITY)
        background = np.repeat(model.background_vectors[args.beam][:, None],
                               st.data.shape[1], axis=1)
        foreground = np.abs(st.data - background)
        for name, mat in (("original", st.data), ("background", background),
                          ("foreground", foreground)):
            fileio.atomic_write_text(f"{args.out}_{name}.pgm",
                                     matrix_to_pgm(mat, lo=0.0, hi=255.0))
    elif args.kind == "trajectories":
        trajectories = fileio.read_tracks_csv(args.inputs[0])
        movements = None
        if args.zones:
            zones = fileio.read_zones_json(args.zones)
            movements = {}
            for traj in trajectories:
                counts, _ = count_movements([traj], zones)
                movements[traj.track_id] = next(iter(counts), None)
        fileio.atomic_write_text(args.out,
                                 trajectories_svg(trajectories, movements))
    else:  # histogram
        cfg = fileio.read_sensor_config(args.sensor) if args.sensor \
            else default_sensor_config()
        frames = fileio.read_frames_csv(args.inputs[0], cfg)
        from .cfta import collect_unit_ranges
        samples, nrc = collect_unit_ranges(frames, args.beam, args.bin)
        threshold, provenance = cfta_unit(samples, nrc, cfg)
        if provenance == "T":
            hist = fine_histogram(coarse_step(samples, cfg.max_range))
        else:
            hist = fine_histogram(samples) if samples.size else None
        if hist is None:
            raise ValidationError("unit has no returns to plot")
        fileio.atomic_write_text(
            args.out, histogram_svg(hist.counts, hist.bin_edges, threshold))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarbg",
        description="Roadside LiDAR background subtraction, detection and tracking")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scene into frame/truth files")
    p.add_argument("scene", help="scene JSON")
    p.add_argument("n_frames", type=int)
    p.add_argument("out_dir")
    p.add_argument("--sensor", help="sensor config JSON (default: built-in 16 beam)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a background model from frames")
    p.add_argument("frames", help="frames CSV")
    p.add_argument("config", help="run or sensor config JSON")
    p.add_argument("model", help="output model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run per-frame detection")
    p.add_argument("frames")
    p.add_argument("model")
    p.add_argument("roi", help="ROI polygons JSON, or - for no ROI")
    p.add_argument("out_dir")
    p.add_argument("--fusion", default="union",
                   choices=[m.value for m in FusionMode])
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("track", help="track detections and count movements")
    p.add_argument("detections")
    p.add_argument("zones")
    p.add_argument("out_dir")
    p.add_argument("--frame-rate", type=float, default=10.0)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    p.add_argument("predictions")
    p.add_argument("truth")
    p.add_argument("out_dir")
    p.add_argument("--mode", required=True, choices=["points", "counts"])
    p.add_argument("--frames", help="frames CSV (points mode)")
    p.add_argument("--sensor", help="sensor config JSON (points mode)")
    p.add_argument("--zones", help="zones JSON (counts mode)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="emit PGM/SVG visualizations")
    p.add_argument("--kind", required=True,
                   choices=["stmap", "trajectories", "histogram"])
    p.add_argument("inputs", nargs="+",
                   help="stmap: frames.csv; trajectories: tracks.csv; "
                        "histogram: frames.csv")
    p.add_argument("out", help="output path (stmap: prefix for 3 PGM files)")
    p.add_argument("--model", help="model JSON (stmap)")
    p.add_argument("--beam", type=int, default=0)
    p.add_argument("--bin", type=int, default=0)
    p.add_argument("--zones", help="zones JSON for trajectory coloring")
    p.add_argument("--sensor", help="sensor config JSON (histogram)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, PolarBGError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
