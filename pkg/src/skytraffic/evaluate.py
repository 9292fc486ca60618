"""Detection scoring: IoU matching, count aggregation, fixture audit.

Boxes are half-open (x_min, y_min, x_max, y_max) rectangles. Matching is
greedy one-to-one by descending IoU with deterministic tie-breaking, and
aggregate metrics are computed from summed counts (sum first, divide
once), displayed at 3 decimals with ties rounded away from zero. A metric
whose denominator is zero is undefined and stays None rather than
pretending to be 0 or 1.
"""

import csv
import io
import math
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path

DEFAULT_IOU_MIN = 0.3
FIXTURE_PATH = Path(__file__).parent / "data" / "field_results.csv"


def sample_frames(start, end=None, step=None):
    """Inclusive sampled index set start, start+step, ... up to end.

    Accepts either three integers or a single FrameSamplingPolicy.
    """
    if isinstance(start, FrameSamplingPolicy):
        if end is not None or step is not None:
            raise TypeError("pass a policy alone or three integers")
        start, end, step = start.start, start.end, start.step
    if start < 0:
        raise ValueError(f"sampling start must be >= 0, got {start}")
    if end < start:
        raise ValueError(f"sampling end {end} precedes start {start}")
    if step < 1:
        raise ValueError(f"sampling step must be >= 1, got {step}")
    return list(range(start, end + 1, step))


@dataclass(frozen=True)
class FrameSamplingPolicy:
    start: int = 200
    end: int = 700
    step: int = 5

    def __post_init__(self):
        sample_frames(self.start, self.end, self.step)

    def indices(self):
        return sample_frames(self.start, self.end, self.step)


def iou(box_a, box_b):
    ax0, ay0, ax1, ay1 = box_a
    bx0, by0, bx1, by1 = box_b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    return inter / (area_a + area_b - inter)


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: tuple  # (det_index, gt_index, iou)


def match_frame(detections, truths, iou_min=DEFAULT_IOU_MIN):
    """Greedy one-to-one matching.

    Candidate pairs at or above iou_min are taken in descending IoU order;
    ties prefer the lower detection index, then the lower truth index.
    Unmatched detections are false positives, unmatched truths false
    negatives.
    """
    if not 0.0 < iou_min <= 1.0:
        raise ValueError(f"iou_min must be in (0, 1], got {iou_min}")
    cands = []
    for i, d in enumerate(detections):
        for j, g in enumerate(truths):
            v = iou(d, g)
            if v >= iou_min:
                cands.append((-v, i, j))
    cands.sort()
    used_d = set()
    used_g = set()
    pairs = []
    for negv, i, j in cands:
        if i in used_d or j in used_g:
            continue
        used_d.add(i)
        used_g.add(j)
        pairs.append((i, j, -negv))
    tp = len(pairs)
    return MatchResult(tp=tp, fp=len(detections) - tp, fn=len(truths) - tp,
                       pairs=tuple(pairs))


@dataclass(frozen=True)
class PerFrameCounts:
    frame_index: int
    tp: int
    fp: int
    fn: int


def score_frames(dets_by_frame, gts_by_frame, frame_indices, iou_min=DEFAULT_IOU_MIN):
    """Match every sampled frame. Missing frames count as empty."""
    out = []
    for f in frame_indices:
        m = match_frame(dets_by_frame.get(f, ()), gts_by_frame.get(f, ()), iou_min)
        out.append(PerFrameCounts(frame_index=f, tp=m.tp, fp=m.fp, fn=m.fn))
    return out


def round_half_away(x, decimals=3):
    """Round with .5 ties moving away from zero (0.8695 -> 0.870 at 3)."""
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(x).quantize(q, rounding=ROUND_HALF_UP))


def metrics_from_counts(tp, fp, fn):
    """(precision, recall, f1) with None where the ratio is undefined."""
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


@dataclass(frozen=True)
class MetricsRecord:
    """Aggregated counts and raw metric values for one scenario direction.

    precision/recall/f1 hold the unrounded ratios (or None when
    undefined); display_* return the 3-decimal presentation values.
    """

    band: str
    height_ft: float
    azimuth_deg: float
    direction: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    def display(self, name):
        v = getattr(self, name)
        return None if v is None else round_half_away(v, 3)


def aggregate(counts, band="", height_ft=None, azimuth_deg=None, direction=""):
    """Sum per-frame counts, then derive the aggregate ratios once."""
    tp = sum(c.tp for c in counts)
    fp = sum(c.fp for c in counts)
    fn = sum(c.fn for c in counts)
    precision, recall, f1 = metrics_from_counts(tp, fp, fn)
    return MetricsRecord(band=band, height_ft=height_ft, azimuth_deg=azimuth_deg,
                         direction=direction, tp=tp, fp=fp, fn=fn,
                         precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class FixtureMismatch:
    row: tuple  # (band, height_ft, azimuth_deg, direction)
    metric: str
    printed: float
    recomputed: float


@dataclass(frozen=True)
class FixtureReport:
    rows: int
    values_checked: int
    mismatches: tuple

    @property
    def ok(self):
        return not self.mismatches

    def lines(self):
        out = []
        for m in self.mismatches:
            band, h, az, d = m.row
            out.append(f"{band} {h:g}ft az{az:g} {d}: {m.metric} printed "
                       f"{m.printed:.3f} recomputed {m.recomputed:.3f}")
        out.append(f"{self.rows} rows, {self.values_checked} derived values, "
                   f"{len(self.mismatches)} disagreements")
        return out


def load_fixture(path=None):
    """Rows of the bundled field results table."""
    path = FIXTURE_PATH if path is None else Path(path)
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append({
                "band": rec["band"],
                "height_ft": float(rec["height_ft"]),
                "azimuth_deg": float(rec["azimuth_deg"]),
                "direction": rec["direction"],
                "tp": int(rec["tp"]),
                "fp": int(rec["fp"]),
                "fn": int(rec["fn"]),
                "precision": float(rec["precision"]),
                "recall": float(rec["recall"]),
                "f1": float(rec["f1"]),
            })
    return rows


def fixture_check(path=None):
    """Recompute every derived metric in the bundled results table from its
    raw counts and report rows whose printed values disagree at 3 decimals.
    Disagreements are reported, not raised: the table is a transcription of
    measured results and the audit exists to locate inconsistencies."""
    rows = load_fixture(path)
    mismatches = []
    checked = 0
    for r in rows:
        p, rec, f1 = metrics_from_counts(r["tp"], r["fp"], r["fn"])
        key = (r["band"], r["height_ft"], r["azimuth_deg"], r["direction"])
        for name, computed in (("precision", p), ("recall", rec), ("f1", f1)):
            checked += 1
            printed = r[name]
            shown = None if computed is None else round_half_away(computed, 3)
            if shown is None or abs(shown - printed) > 5e-4:
                mismatches.append(FixtureMismatch(
                    row=key, metric=name, printed=printed,
                    recomputed=float("nan") if computed is None else shown))
    return FixtureReport(rows=len(rows), values_checked=checked,
                         mismatches=tuple(mismatches))
