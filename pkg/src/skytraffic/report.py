"""Result emission: metrics CSV, grouped-bar SVG charts, annotated frames.

The CSV carries exact counts and 3-decimal display metrics ("NA" when
undefined), so parse(emit(records)) reproduces counts exactly and metrics
to the printed precision. Charts are written as plain SVG text: one facet
per direction, x groups are (height, azimuth) scenarios, one bar series
per band, y axis fixed to [0, 1], undefined bars omitted.
"""

import csv
from pathlib import Path

import numpy as np

from .evaluate import MetricsRecord
from .frameio import write_frame
from .geometry import cutoff_row

CSV_COLUMNS = ("height_ft", "azimuth_deg", "band", "direction",
               "tp", "fp", "fn", "precision", "recall", "f1")
BAND_COLORS = {"RGB": "#4878a8", "IR": "#b0513f"}
_FALLBACK_COLORS = ("#5aa469", "#8a6fae", "#c2913d")

DETECTION_COLOR = (0, 200, 0)
TRUTH_COLOR = (60, 120, 255)
CUTOFF_COLOR = (230, 190, 40)


def _fmt_metric(v):
    return "NA" if v is None else f"{v:.3f}"


def _fmt_axis(v):
    return "" if v is None else f"{v:g}"


def write_metrics_csv(path, records):
    if not records:
        raise ValueError("no metrics records to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt_axis(r.height_ft), _fmt_axis(r.azimuth_deg),
                        r.band, r.direction, r.tp, r.fp, r.fn,
                        _fmt_metric(r.display("precision")),
                        _fmt_metric(r.display("recall")),
                        _fmt_metric(r.display("f1"))])


def read_metrics_csv(path):
    """Records back from a CSV; metric fields hold the 3-decimal display
    values (or None for "NA"), counts are exact."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{Path(path).name}: missing columns {sorted(missing)}")
        for rec in reader:
            records.append(MetricsRecord(
                band=rec["band"],
                height_ft=float(rec["height_ft"]) if rec["height_ft"] else None,
                azimuth_deg=float(rec["azimuth_deg"]) if rec["azimuth_deg"] else None,
                direction=rec["direction"],
                tp=int(rec["tp"]), fp=int(rec["fp"]), fn=int(rec["fn"]),
                precision=None if rec["precision"] == "NA" else float(rec["precision"]),
                recall=None if rec["recall"] == "NA" else float(rec["recall"]),
                f1=None if rec["f1"] == "NA" else float(rec["f1"])))
    return records


def _band_color(band, index):
    return BAND_COLORS.get(band, _FALLBACK_COLORS[index % len(_FALLBACK_COLORS)])


def render_grouped_bars(records, metric="f1", title=None):
    """SVG text: grouped bars of one metric, faceted by direction."""
    if not records:
        raise ValueError("no metrics records to chart")
    if metric not in ("precision", "recall", "f1"):
        raise ValueError(f"metric must be precision, recall, or f1, got '{metric}'")
    directions = sorted({r.direction for r in records})
    bands = sorted({r.band for r in records})
    groups = sorted({(r.height_ft or 0, r.azimuth_deg or 0) for r in records})
    by_key = {(r.direction, r.band, (r.height_ft or 0, r.azimuth_deg or 0)): r
              for r in records}

    bar_w, bar_gap, group_gap = 16, 4, 18
    group_w = len(bands) * (bar_w + bar_gap) - bar_gap + group_gap
    plot_w = max(220, len(groups) * group_w)
    plot_h = 170
    mleft, mtop, mbot = 46, 34, 48
    facet_h = mtop + plot_h + mbot
    width = mleft + plot_w + 24
    height = facet_h * len(directions) + 18
    title = title or f"{metric} by scenario"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           '<style>text{font-family:sans-serif}</style>',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for fi, direction in enumerate(directions):
        oy = fi * facet_h
        base = oy + mtop + plot_h
        out.append(f'<text x="{mleft}" y="{oy + 18}" font-size="13" '
                   f'font-weight="bold">{title} - {direction}</text>')
        for tick in range(6):
            v = tick / 5.0
            y = base - v * plot_h
            out.append(f'<line x1="{mleft}" y1="{y:.1f}" x2="{mleft + plot_w}" '
                       f'y2="{y:.1f}" stroke="#ddd" stroke-width="1"/>')
            out.append(f'<text x="{mleft - 6}" y="{y + 4:.1f}" font-size="10" '
                       f'text-anchor="end">{v:.1f}</text>')
        out.append(f'<line x1="{mleft}" y1="{base}" x2="{mleft + plot_w}" '
                   f'y2="{base}" stroke="#333" stroke-width="1"/>')
        for gi, g in enumerate(groups):
            gx = mleft + gi * group_w
            for bi, band in enumerate(bands):
                r = by_key.get((direction, band, g))
                v = None if r is None else r.display(metric)
                if v is None:
                    continue  # undefined: no bar
                x = gx + bi * (bar_w + bar_gap)
                h = v * plot_h
                out.append(f'<rect x="{x:.1f}" y="{base - h:.1f}" width="{bar_w}" '
                           f'height="{h:.1f}" fill="{_band_color(band, bi)}"/>')
            label = f"{g[0]:g}ft/{g[1]:g}"
            cx = gx + (group_w - group_gap) / 2.0
            out.append(f'<text x="{cx:.1f}" y="{base + 14}" font-size="9" '
                       f'text-anchor="middle">{label}</text>')
        for bi, band in enumerate(bands):
            lx = mleft + bi * 64
            ly = base + 26
            out.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" '
                       f'fill="{_band_color(band, bi)}"/>')
            out.append(f'<text x="{lx + 14}" y="{ly + 9}" font-size="10">{band}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_chart(path, records, metric="f1", title=None):
    Path(path).write_text(render_grouped_bars(records, metric, title))


def emit_report(records, out_dir, csv_table=True, f1_chart=True, recall_chart=False):
    """Write the selected report files; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if csv_table:
        p = out_dir / "metrics.csv"
        write_metrics_csv(p, records)
        written.append(p)
    if f1_chart:
        p = out_dir / "f1.svg"
        write_chart(p, records, "f1")
        written.append(p)
    if recall_chart:
        p = out_dir / "recall.svg"
        write_chart(p, records, "recall")
        written.append(p)
    return written


def _draw_box(img, box, color):
    x0, y0, x1, y1 = box
    img[y0, x0:x1] = color
    img[y1 - 1, x0:x1] = color
    img[y0:y1, x0] = color
    img[y0:y1, x1 - 1] = color


def annotate_frames(frames, log, gt=None, out_dir="annotated", frame_indices=None):
    """Write frames as color images with detection boxes, optional truth
    boxes, and the cutoff line; returns the written paths."""
    if len(frames) != log.frame_count:
        raise ValueError(f"log covers {log.frame_count} frames but the sequence "
                         f"has {len(frames)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if frame_indices is None:
        frame_indices = range(log.frame_count)
    cut = cutoff_row(log.config_snapshot.get("cutoff_fraction", 0.0), log.height)
    paths = []
    for i in frame_indices:
        frame = np.asarray(frames[i])
        img = frame.copy() if frame.ndim == 3 else np.repeat(frame[:, :, None], 3, axis=2)
        if 0 < cut < log.height:
            img[cut, :] = CUTOFF_COLOR
        if gt is not None:
            for e in gt.entries(i):
                _draw_box(img, e.box, TRUTH_COLOR)
        for det in log.detections(i):
            _draw_box(img, det.box, DETECTION_COLOR)
        p = out_dir / f"frame_{i:06d}.ppm"
        write_frame(p, img)
        paths.append(p)
    return paths
