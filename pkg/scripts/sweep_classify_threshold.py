#!/usr/bin/env python3
"""Trace the precision/recall trade-off of the classification threshold.

Renders a thermal-style scene with flickering roadside patches of graded
amplitude, trains the background model once over the whole sequence, then
classifies the sampled frames at each candidate threshold. Low thresholds
admit every patch as foreground (false positives); raising the threshold
silences the patches one amplitude tier at a time, at the eventual cost of
real detections.

    python3 scripts/sweep_classify_threshold.py
    python3 scripts/sweep_classify_threshold.py --thresholds 9 16 36 64 --csv sweep.csv
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from skytraffic.bgmodel import MixtureModel, MixtureParams
from skytraffic.evaluate import match_frame, metrics_from_counts, sample_frames
from skytraffic.geometry import build_all_roi_masks
from skytraffic.maskops import (StructuringElement, closing,
                                connected_components, opening,
                                regions_to_detections)
from skytraffic.synth import ClutterRegion, generate, standard_scene

PATCHES = (
    ClutterRegion(box=(40, 330, 94, 337), amplitude=11.0, period=40, phase=200),
    ClutterRegion(box=(180, 330, 234, 337), amplitude=15.0, period=40, phase=210),
    ClutterRegion(box=(300, 395, 354, 402), amplitude=21.0, period=40, phase=220),
    ClutterRegion(box=(440, 395, 494, 402), amplitude=31.0, period=40, phase=230),
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--thresholds", type=float, nargs="+",
                    default=[15.0, 40.0, 80.0, 160.0])
    ap.add_argument("--frames", type=int, default=750)
    ap.add_argument("--seed", type=int, default=555)
    ap.add_argument("--min-area", type=float, default=80.0)
    ap.add_argument("--iou-min", type=float, default=0.3)
    ap.add_argument("--csv", help="also write the table to this path")
    args = ap.parse_args(argv)

    scene = standard_scene(band="IR", width=640, height=480,
                           frame_count=args.frames, seed=args.seed,
                           noise_sigma=0.0, clutter=PATCHES)
    frames, gt, roi = generate(scene)
    params = MixtureParams(classify_threshold_sq=36.0, initial_variance=4.0,
                           min_variance=4.0)
    model = MixtureModel(params, frames[0])
    roi_masks = build_all_roi_masks(scene.width, scene.height, roi)
    se = StructuringElement(3, 3)

    window = set(sample_frames(200, min(700, args.frames - 1), 5))
    sweep = sorted(args.thresholds)
    totals = {t: [0, 0, 0] for t in sweep}  # t -> [tp, fp, fn]

    for i in range(args.frames):
        frame = frames[i]
        model.apply(frame)
        if i not in window:
            continue
        for t in sweep:
            mask = model.classify(frame, t).view(np.bool_)
            for d, dmask in roi_masks.items():
                morphed = closing(opening(mask & dmask, se), se)
                dets = regions_to_detections(connected_components(morphed),
                                             args.min_area, dmask)
                r = match_frame([x.box for x in dets], gt.boxes(i, d),
                                args.iou_min)
                totals[t][0] += r.tp
                totals[t][1] += r.fp
                totals[t][2] += r.fn

    rows = []
    print(f"{'threshold':>9} {'tp':>5} {'fp':>5} {'fn':>5} "
          f"{'precision':>9} {'recall':>7} {'f1':>6}")
    for t in sweep:
        tp, fp, fn = totals[t]
        precision, recall, f1 = metrics_from_counts(tp, fp, fn)
        fmt = lambda v: "NA" if v is None else f"{v:.3f}"
        print(f"{t:>9g} {tp:>5} {fp:>5} {fn:>5} "
              f"{fmt(precision):>9} {fmt(recall):>7} {fmt(f1):>6}")
        rows.append({"threshold": t, "tp": tp, "fp": fp, "fn": fn,
                     "precision": fmt(precision), "recall": fmt(recall),
                     "f1": fmt(f1)})

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
