"""Command line entry points.

Subcommands: synth (scene -> frames + truth), detect (frames or scene ->
detection log), eval (logs -> metrics CSV), report (CSV -> charts),
fixture-check (audit the bundled field results table), bench (throughput).
Success exits 0; failures print one JSON error line to stderr and exit
nonzero.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from . import synth as synthmod
from .config import ConfigError, build_pipeline_config, load_config, scene_from_preset
from .evaluate import FrameSamplingPolicy, aggregate, fixture_check, score_frames
from .frameio import (load_frames, read_detection_log, read_ground_truth_log,
                      read_roi, write_detection_log, write_frames,
                      write_ground_truth_log, write_roi)
from .pipeline import PipelineConfig, run_sequence
from .report import annotate_frames, read_metrics_csv, write_chart, write_metrics_csv


def _scene_for(run, scenario):
    if run.scene_preset is not None:
        return scene_from_preset(run.scene_preset, band=scenario.band)
    return run.scene


def _scenario_dirs(run, out_root):
    """(scenario, output dir) pairs; one scenario writes at the root."""
    out_root = Path(out_root)
    if len(run.scenarios) == 1:
        return [(run.scenarios[0], out_root)]
    names = [s.label for s in run.scenarios]
    seen = {}
    uniq = []
    for n in names:
        seen[n] = seen.get(n, 0) + 1
        uniq.append(n if seen[n] == 1 else f"{n}-{seen[n]}")
    return [(s, out_root / n) for s, n in zip(run.scenarios, uniq)]


def cmd_synth(args):
    run = load_config(args.config)
    if run.scene is None and run.scene_preset is None:
        raise ConfigError("input.scene", "synth needs a scene input")
    out_root = Path(args.out or run.output_dir)
    for scenario, out in _scenario_dirs(run, out_root):
        scene = _scene_for(run, scenario)
        frames, gt, roi = synthmod.generate(scene)
        out.mkdir(parents=True, exist_ok=True)
        write_frames(out / "frames", frames)
        write_ground_truth_log(out / "gt.jsonl", gt, scene.width, scene.height)
        write_roi(out / "roi.json", roi)
        print(f"{scenario.label}: {scene.frame_count} frames -> {out}")
    return 0


def cmd_detect(args):
    run = load_config(args.config)
    out_root = Path(args.out or run.output_dir)
    if run.frames_dir is not None and len(run.scenarios) > 1:
        raise ConfigError("grid", "frames_dir input supports a single scenario; "
                          "scenario grids need a scene input")
    for scenario, out in _scenario_dirs(run, out_root):
        gt = None
        if run.frames_dir is not None:
            frames = load_frames(run.frames_dir)
            roi = run.roi if run.roi is not None else read_roi(run.roi_file)
        else:
            scene = _scene_for(run, scenario)
            frames, gt, roi = synthmod.generate(scene)
        pipeline_config = build_pipeline_config(run, scenario, roi)
        log = run_sequence(pipeline_config, frames)
        out.mkdir(parents=True, exist_ok=True)
        write_detection_log(out / "detections.jsonl", log)
        if gt is not None:
            write_ground_truth_log(out / "gt.jsonl", gt, log.width, log.height)
        if run.emit_annotated:
            ix = [f for f in run.sampling.indices() if f < log.frame_count]
            annotate_frames(frames, log, gt, out / "annotated", frame_indices=ix)
        total = sum(len(f) for f in log.frames)
        print(f"{scenario.label}: {log.frame_count} frames, "
              f"{total} detections -> {out}")
    return 0


def _score_logs(det_log, gt, sampling, iou_min, band, height_ft, azimuth_deg):
    ix = [f for f in sampling.indices()
          if f < det_log.frame_count and f < len(gt)]
    records = []
    for d in det_log.directions:
        dets = {f: det_log.boxes(f, d) for f in ix}
        gts = {f: gt.boxes(f, d) for f in ix}
        records.append(aggregate(score_frames(dets, gts, ix, iou_min),
                                 band=band, height_ft=height_ft,
                                 azimuth_deg=azimuth_deg, direction=d))
    return records


def _parse_sampling(text):
    try:
        start, end, step = (int(v) for v in text.split(":"))
        return FrameSamplingPolicy(start=start, end=end, step=step)
    except (TypeError, ValueError):
        raise ValueError(f"sampling must be start:end:step, got '{text}'") from None


def cmd_eval(args):
    records = []
    if args.config:
        run = load_config(args.config)
        run_dir = Path(args.run or run.output_dir)
        sampling = run.sampling if args.sampling is None else _parse_sampling(args.sampling)
        iou_min = run.iou_min if args.iou_min is None else args.iou_min
        for scenario, d in _scenario_dirs(run, run_dir):
            det_log = read_detection_log(d / "detections.jsonl")
            gt, _, _ = read_ground_truth_log(d / "gt.jsonl")
            records.extend(_score_logs(
                det_log, gt, sampling, iou_min, scenario.band,
                scenario.geometry.height_above_road, scenario.geometry.azimuth_deg))
        out_csv = Path(args.out) if args.out else run_dir / "metrics.csv"
        emit_svg = run.emit_svg
    else:
        if not args.detections or not args.ground_truth:
            raise ValueError("eval needs --config/--run or both "
                             "--detections and --ground-truth")
        det_log = read_detection_log(args.detections)
        gt, _, _ = read_ground_truth_log(args.ground_truth)
        sampling = (FrameSamplingPolicy() if args.sampling is None
                    else _parse_sampling(args.sampling))
        iou_min = 0.3 if args.iou_min is None else args.iou_min
        snap = det_log.config_snapshot
        geom = snap.get("geometry") or {}
        records.extend(_score_logs(
            det_log, gt, sampling, iou_min, snap.get("band", ""),
            geom.get("height_above_road"), geom.get("azimuth_deg")))
        out_csv = Path(args.out) if args.out else Path("metrics.csv")
        emit_svg = False
    write_metrics_csv(out_csv, records)
    print(f"{len(records)} metric rows -> {out_csv}")
    if emit_svg:
        chart = out_csv.with_name("f1.svg")
        write_chart(chart, records, "f1")
        print(f"chart -> {chart}")
    return 0


def cmd_report(args):
    records = read_metrics_csv(args.metrics)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    f1_path = out_dir / "f1.svg"
    write_chart(f1_path, records, "f1")
    print(f"chart -> {f1_path}")
    if args.recall:
        recall_path = out_dir / "recall.svg"
        write_chart(recall_path, records, "recall")
        print(f"chart -> {recall_path}")
    return 0


def cmd_fixture_check(args):
    rep = fixture_check(args.fixture)
    for line in rep.lines():
        print(line)
    return 0 if rep.ok else 1


def cmd_bench(args):
    from .bgmodel import MixtureParams
    from .geometry import ScenarioGeometry

    scene = synthmod.standard_scene(width=args.width, height=args.height,
                                    frame_count=args.frames + args.warmup,
                                    seed=args.seed)
    source, _, roi = synthmod.generate(scene)
    frames = [source[i] for i in range(len(source))]  # pre-render; time detection only
    geom = ScenarioGeometry(height_above_road=300.0)
    config = PipelineConfig(roi=roi, band="RGB", geometry=geom,
                            focal_length_px=577.0)
    from .pipeline import DetectionPipeline
    pipe = DetectionPipeline(config, frames[0])
    for f in frames[:args.warmup]:
        pipe.process(f)
    t0 = time.perf_counter()
    for f in frames[args.warmup:]:
        pipe.process(f)
    elapsed = time.perf_counter() - t0
    fps = args.frames / elapsed
    print(json.dumps({"width": args.width, "height": args.height,
                      "frames": args.frames, "elapsed_s": round(elapsed, 3),
                      "fps": round(fps, 1)}, sort_keys=True))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="skytraffic",
                                description="Aerial traffic detection toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="render a synthetic scene to frames + truth")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: config output_dir)")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("detect", help="run detection over frames or a scene")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("eval", help="score detection logs against ground truth")
    s.add_argument("--config")
    s.add_argument("--run", help="directory produced by detect")
    s.add_argument("--detections")
    s.add_argument("--ground-truth")
    s.add_argument("--sampling", help="start:end:step")
    s.add_argument("--iou-min", type=float)
    s.add_argument("--out", help="CSV path")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("report", help="charts from a metrics CSV")
    s.add_argument("--metrics", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--recall", action="store_true", help="also chart recall")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("fixture-check", help="audit the bundled results table")
    s.add_argument("--fixture", help="alternate CSV path")
    s.set_defaults(func=cmd_fixture_check)

    s = sub.add_parser("bench", help="measure detection throughput")
    s.add_argument("--width", type=int, default=640)
    s.add_argument("--height", type=int, default=480)
    s.add_argument("--frames", type=int, default=300)
    s.add_argument("--warmup", type=int, default=40)
    s.add_argument("--seed", type=int, default=1234)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(json.dumps({"error": str(e), "field": e.field}, sort_keys=True),
              file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(json.dumps({"error": str(e)}, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
