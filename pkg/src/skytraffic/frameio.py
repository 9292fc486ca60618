"""File formats: raster frames, detection and truth logs, region specs.

Frames are binary PGM (single-channel) or PPM (3-channel), 8-bit
maxval 255, written with a fixed header layout so identical pixels give
identical bytes. Logs are line-delimited JSON: one metadata line, then
one record per box, with sorted keys and no float formatting choices
left to chance. Region specs are a small JSON document.
"""

import json
import re
from pathlib import Path

import numpy as np

from .geometry import RoiSpec
from .maskops import Detection
from .pipeline import DetectionLog
from .synth import GroundTruthLog, GtEntry

FRAME_SUFFIXES = (".pgm", ".ppm")
_HEADER_RE = re.compile(rb"^(P[56])\s+(\d+)\s+(\d+)\s+(\d+)\s")


def write_frame(path, frame):
    """Write one frame as binary PGM (2-D) or PPM (3-D, 3 channels)."""
    frame = np.ascontiguousarray(frame)
    if frame.dtype != np.uint8:
        raise ValueError(f"frames must be uint8, got {frame.dtype}")
    if frame.ndim == 2:
        magic = b"P5"
    elif frame.ndim == 3 and frame.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"frame shape {frame.shape} is not (H, W) or (H, W, 3)")
    h, w = frame.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(frame.tobytes())


def read_frame(path):
    path = Path(path)
    data = path.read_bytes()
    m = _HEADER_RE.match(data)
    if not m:
        raise ValueError(f"{path.name}: not a binary PGM/PPM file")
    magic, w, h, maxval = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if maxval != 255:
        raise ValueError(f"{path.name}: maxval must be 255, got {maxval}")
    channels = 1 if magic == b"P5" else 3
    n = w * h * channels
    body = data[m.end():]
    if len(body) != n:
        raise ValueError(f"{path.name}: expected {n} pixel bytes, found {len(body)}")
    arr = np.frombuffer(body, dtype=np.uint8)
    return arr.reshape((h, w) if channels == 1 else (h, w, 3))


def write_frames(dirpath, frames, prefix="frame_"):
    """Write a sequence as zero-padded files; returns the paths."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        suffix = ".pgm" if np.asarray(frame).ndim == 2 else ".ppm"
        p = dirpath / f"{prefix}{i:06d}{suffix}"
        write_frame(p, frame)
        paths.append(p)
    return paths


class FrameDirSource:
    """Ordered, lazily read frame sequence from a directory.

    Files sort lexicographically (zero-padded names make that the frame
    order) and every frame must match the first frame's dimensions.
    """

    def __init__(self, dirpath):
        dirpath = Path(dirpath)
        self.paths = sorted(p for p in dirpath.iterdir()
                            if p.suffix.lower() in FRAME_SUFFIXES)
        if not self.paths:
            raise ValueError(f"no {'/'.join(FRAME_SUFFIXES)} frames in {dirpath}")
        first = read_frame(self.paths[0])
        self.height, self.width = first.shape[:2]
        self._first = first

    def __len__(self):
        return len(self.paths)

    def __getitem__(self, i):
        frame = self._first if i == 0 else read_frame(self.paths[i])
        if frame.shape[:2] != (self.height, self.width):
            raise ValueError(
                f"{self.paths[i].name}: {frame.shape[1]}x{frame.shape[0]} breaks the "
                f"sequence dimensions {self.width}x{self.height}")
        return frame

    def __iter__(self):
        for i in range(len(self.paths)):
            yield self[i]


def load_frames(dirpath):
    return FrameDirSource(dirpath)


def _dump(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _check_box(box, width, height, where):
    x0, y0, x1, y1 = box
    if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
        raise ValueError(f"{where}: box {box} outside frame {width}x{height}")


def write_detection_log(path, log):
    with open(path, "w") as fh:
        meta = {"kind": "detections", "width": log.width, "height": log.height,
                "frame_count": log.frame_count, "directions": list(log.directions),
                "config": log.config_snapshot}
        fh.write(_dump(meta) + "\n")
        for det in log.all_detections():
            fh.write(_dump({"source": "detection", "frame": det.frame_index,
                            "direction": det.direction, "box": list(det.box),
                            "area": det.area}) + "\n")


def read_detection_log(path):
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path.name}: empty log")
    meta = json.loads(lines[0])
    if meta.get("kind") != "detections":
        raise ValueError(f"{path.name}: expected a detections log, "
                         f"got kind '{meta.get('kind')}'")
    log = DetectionLog(width=meta["width"], height=meta["height"],
                       directions=tuple(meta["directions"]),
                       config_snapshot=meta["config"],
                       frames=[[] for _ in range(meta["frame_count"])])
    last = -1
    for ln, line in enumerate(lines[1:], start=2):
        rec = json.loads(line)
        f = rec["frame"]
        if not 0 <= f < meta["frame_count"]:
            raise ValueError(f"{path.name} line {ln}: frame {f} outside "
                             f"0..{meta['frame_count'] - 1}")
        if f < last:
            raise ValueError(f"{path.name} line {ln}: frame {f} after frame {last}, "
                             "records must be ordered")
        last = f
        _check_box(rec["box"], meta["width"], meta["height"], f"{path.name} line {ln}")
        if rec["direction"] not in log.directions:
            raise ValueError(f"{path.name} line {ln}: unknown direction "
                             f"'{rec['direction']}'")
        log.frames[f].append(Detection(frame_index=f, direction=rec["direction"],
                                       box=tuple(rec["box"]), area=rec["area"]))
    return log


def write_ground_truth_log(path, gt, width, height):
    with open(path, "w") as fh:
        meta = {"kind": "ground-truth", "width": width, "height": height,
                "frame_count": len(gt)}
        fh.write(_dump(meta) + "\n")
        for f in range(len(gt)):
            for e in gt.entries(f):
                fh.write(_dump({"source": "truth", "frame": f,
                                "direction": e.direction, "box": list(e.box),
                                "id": e.vehicle_id}) + "\n")


def read_ground_truth_log(path):
    """(GroundTruthLog, width, height) from a truth log file."""
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path.name}: empty log")
    meta = json.loads(lines[0])
    if meta.get("kind") != "ground-truth":
        raise ValueError(f"{path.name}: expected a ground-truth log, "
                         f"got kind '{meta.get('kind')}'")
    frames = [[] for _ in range(meta["frame_count"])]
    last = -1
    for ln, line in enumerate(lines[1:], start=2):
        rec = json.loads(line)
        f = rec["frame"]
        if not 0 <= f < meta["frame_count"]:
            raise ValueError(f"{path.name} line {ln}: frame {f} outside "
                             f"0..{meta['frame_count'] - 1}")
        if f < last:
            raise ValueError(f"{path.name} line {ln}: frame {f} after frame {last}, "
                             "records must be ordered")
        last = f
        _check_box(rec["box"], meta["width"], meta["height"], f"{path.name} line {ln}")
        frames[f].append(GtEntry(direction=rec["direction"], box=tuple(rec["box"]),
                                 vehicle_id=rec["id"]))
    gt = GroundTruthLog(tuple(tuple(row) for row in frames))
    return gt, meta["width"], meta["height"]


def write_roi(path, roi):
    doc = {"cutoff_fraction": roi.cutoff_fraction,
           "directions": {d: [list(v) for v in poly]
                          for d, poly in sorted(roi.direction_polygons.items())}}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def read_roi(path):
    doc = json.loads(Path(path).read_text())
    return RoiSpec(direction_polygons={d: tuple(tuple(v) for v in poly)
                                       for d, poly in doc["directions"].items()},
                   cutoff_fraction=doc["cutoff_fraction"])
