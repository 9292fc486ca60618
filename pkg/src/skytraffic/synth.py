"""Synthetic road scenes with exact ground truth.

Scenes are rendered deterministically from (config, frame index): a static
background, optional per-frame sensor noise, optional flickering clutter
patches, and opaque rectangular vehicles translating along their lane at a
constant speed. The same seed always produces byte-identical frames, and
the ground truth log records precisely the rectangles that were drawn, so
end-to-end detection scores have a closed-form reference.

Two band presets mirror the two sensor families: an RGB-like band with
plain noise and no clutter, and an IR-like band that adds periodically
flickering roadside patches (vegetation and median reflections are the
field analogue). Flicker is a pulse train: a patch jumps by `amplitude`
on one frame out of every `period`, which makes its variance and its
normalized distance under the background model easy to reason about.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import RoiSpec, DEFAULT_CUTOFF_FRACTION
from . import rng

_STREAM_NOISE = 1
_STREAM_TEXTURE = 2

BANDS = ("RGB", "IR")


@dataclass(frozen=True)
class Background:
    """Static scene floor: flat gray or frozen per-pixel texture."""

    mode: str = "flat"
    intensity: float = 80.0
    texture_amplitude: float = 0.0

    def __post_init__(self):
        if self.mode not in ("flat", "textured"):
            raise ValueError(f"background.mode must be flat or textured, got '{self.mode}'")
        if not 0.0 <= self.intensity <= 255.0:
            raise ValueError(f"background.intensity must be in [0, 255], got {self.intensity}")
        if self.texture_amplitude < 0:
            raise ValueError("background.texture_amplitude must be >= 0, "
                             f"got {self.texture_amplitude}")


@dataclass(frozen=True)
class ClutterRegion:
    """Axis-aligned patch that jumps by `amplitude` once per `period` frames
    (on frames where (index - phase) % period == 0)."""

    box: tuple
    amplitude: float
    period: int
    phase: int = 0

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"clutter box {self.box} is empty")
        if self.period < 1:
            raise ValueError(f"clutter period must be >= 1, got {self.period}")
        if self.phase < 0:
            raise ValueError(f"clutter phase must be >= 0, got {self.phase}")


@dataclass(frozen=True)
class BandModel:
    band: str = "RGB"
    noise_sigma: float = 2.0
    clutter: tuple = ()

    def __post_init__(self):
        if self.band not in BANDS:
            raise ValueError(f"band must be one of {BANDS}, got '{self.band}'")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def rgb_band_model(noise_sigma=2.0):
    """Clean visible-band preset: noise only, no clutter."""
    return BandModel(band="RGB", noise_sigma=noise_sigma)


def ir_band_model(width, height, noise_sigma=2.0, amplitude=40.0, period=8):
    """Thermal-band preset with two flickering roadside patches scaled to
    the frame."""
    w, h = width, height
    strips = (
        ClutterRegion(box=(int(0.06 * w), int(0.705 * h), int(0.22 * w), int(0.72 * h)),
                      amplitude=amplitude, period=period, phase=0),
        ClutterRegion(box=(int(0.58 * w), int(0.85 * h), int(0.76 * w), int(0.865 * h)),
                      amplitude=amplitude, period=period, phase=period // 2),
    )
    return BandModel(band="IR", noise_sigma=noise_sigma, clutter=strips)


@dataclass(frozen=True)
class VehicleSpec:
    """One vehicle: an opaque rectangle entering at its direction's edge on
    entry_frame and translating at speed px/frame until it would leave the
    frame."""

    entry_frame: int
    direction: str
    lane_top: int
    speed: float
    length_px: int
    height_px: int
    intensity: float

    def __post_init__(self):
        if self.entry_frame < 0:
            raise ValueError(f"vehicle entry_frame must be >= 0, got {self.entry_frame}")
        if self.speed < 1.0:
            raise ValueError(f"vehicle speed must be >= 1 px/frame, got {self.speed}")
        if self.length_px < 1 or self.height_px < 1:
            raise ValueError(f"vehicle size must be >= 1, got "
                             f"{self.length_px}x{self.height_px}")
        if not 0.0 <= self.intensity <= 255.0:
            raise ValueError(f"vehicle intensity must be in [0, 255], got {self.intensity}")


@dataclass(frozen=True)
class SceneConfig:
    width: int
    height: int
    frame_count: int
    seed: int
    background: Background = field(default_factory=Background)
    vehicles: tuple = ()
    band_model: BandModel = field(default_factory=rgb_band_model)
    cutoff_fraction: float = DEFAULT_CUTOFF_FRACTION
    direction_polygons: dict = field(default_factory=dict)
    direction_motion: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dims must be >= 1, got {self.width}x{self.height}")
        if self.frame_count < 1:
            raise ValueError(f"frame_count must be >= 1, got {self.frame_count}")


@dataclass(frozen=True)
class GtEntry:
    direction: str
    box: tuple
    vehicle_id: int


class GroundTruthLog:
    """Per-frame ground truth rectangles, aligned with the rendered frames."""

    def __init__(self, entries_by_frame):
        self.frames = entries_by_frame

    def __len__(self):
        return len(self.frames)

    def boxes(self, frame_index, direction):
        return [e.box for e in self.frames[frame_index] if e.direction == direction]

    def entries(self, frame_index):
        return self.frames[frame_index]

    def instance_count(self, frame_indices=None, direction=None):
        idx = range(len(self.frames)) if frame_indices is None else frame_indices
        total = 0
        for i in idx:
            for e in self.frames[i]:
                if direction is None or e.direction == direction:
                    total += 1
        return total


def _vehicle_box(cfg, v, frame_index):
    """Rectangle of one vehicle at one frame, or None when inactive."""
    if frame_index < v.entry_frame:
        return None
    sign = cfg.direction_motion[v.direction]
    dx = int(math.floor(v.speed * (frame_index - v.entry_frame) + 0.5))
    if sign > 0:
        x0 = dx
    else:
        x0 = cfg.width - v.length_px - dx
    if x0 < 0 or x0 + v.length_px > cfg.width:
        return None
    return (x0, v.lane_top, x0 + v.length_px, v.lane_top + v.height_px)


def validate_scene(cfg):
    for name, poly in cfg.direction_polygons.items():
        if len(poly) < 3:
            raise ValueError(f"scene direction polygon '{name}' needs >= 3 vertices")
    for i, v in enumerate(cfg.vehicles):
        if v.direction not in cfg.direction_polygons:
            raise ValueError(f"vehicle {i}: direction '{v.direction}' has no polygon; "
                             f"configured: {sorted(cfg.direction_polygons)}")
        if v.direction not in cfg.direction_motion:
            raise ValueError(f"vehicle {i}: direction '{v.direction}' has no motion sign")
        if cfg.direction_motion[v.direction] not in (-1, 1):
            raise ValueError(f"vehicle {i}: motion sign must be +1 or -1, got "
                             f"{cfg.direction_motion[v.direction]}")
        if v.lane_top < 0 or v.lane_top + v.height_px > cfg.height:
            raise ValueError(f"vehicle {i}: rows {v.lane_top}..{v.lane_top + v.height_px} "
                             f"leave the frame (height {cfg.height})")
        if v.length_px > cfg.width:
            raise ValueError(f"vehicle {i}: length {v.length_px} exceeds frame width "
                             f"{cfg.width}")
        box = _vehicle_box(cfg, v, v.entry_frame)
        if box is None:
            raise ValueError(f"vehicle {i}: rectangle leaves frame bounds at entry "
                             f"frame {v.entry_frame}")
    for j, c in enumerate(cfg.band_model.clutter):
        x0, y0, x1, y1 = c.box
        if x0 < 0 or y0 < 0 or x1 > cfg.width or y1 > cfg.height:
            raise ValueError(f"clutter region {j}: box {c.box} leaves the frame")


class FrameSequence:
    """Deterministic lazy renderer; index i always yields the same bytes."""

    def __init__(self, cfg):
        self.config = cfg
        n = cfg.width * cfg.height
        base = np.full((cfg.height, cfg.width), cfg.background.intensity, dtype=np.float64)
        if cfg.background.mode == "textured" and cfg.background.texture_amplitude > 0:
            key = rng.stream_key(cfg.seed, _STREAM_TEXTURE)
            u = rng.uniform01(np.arange(n, dtype=np.uint64), key)
            base += ((u - 0.5) * (2.0 * cfg.background.texture_amplitude)).reshape(
                cfg.height, cfg.width)
        self._static = base
        self._noise_key = rng.stream_key(cfg.seed, _STREAM_NOISE)
        self._npix = n

    def __len__(self):
        return self.config.frame_count

    def __getitem__(self, i):
        cfg = self.config
        if not 0 <= i < cfg.frame_count:
            raise IndexError(f"frame {i} out of range 0..{cfg.frame_count - 1}")
        img = self._static.copy()
        for c in cfg.band_model.clutter:
            if (i - c.phase) % c.period == 0 and i >= c.phase:
                x0, y0, x1, y1 = c.box
                img[y0:y1, x0:x1] += c.amplitude
        if cfg.band_model.noise_sigma > 0:
            counters = np.arange(self._npix, dtype=np.uint64) + np.uint64(i * self._npix)
            img += rng.centered_noise(counters, self._noise_key,
                                      cfg.band_model.noise_sigma).reshape(img.shape)
        for v in cfg.vehicles:
            box = _vehicle_box(cfg, v, i)
            if box is not None:
                x0, y0, x1, y1 = box
                img[y0:y1, x0:x1] = v.intensity
        return np.clip(np.rint(img), 0, 255).astype(np.uint8)

    def __iter__(self):
        for i in range(self.config.frame_count):
            yield self[i]


def generate(cfg):
    """Render plan for a scene: (frames, ground truth, detection region)."""
    validate_scene(cfg)
    gt = []
    for i in range(cfg.frame_count):
        row = []
        for vid, v in enumerate(cfg.vehicles):
            box = _vehicle_box(cfg, v, i)
            if box is not None:
                row.append(GtEntry(direction=v.direction, box=box, vehicle_id=vid))
        gt.append(tuple(row))
    roi = RoiSpec(direction_polygons=dict(cfg.direction_polygons),
                  cutoff_fraction=cfg.cutoff_fraction)
    return FrameSequence(cfg), GroundTruthLog(tuple(gt)), roi


def occlusion_scene(base, overlap_fraction, vertical_gap_px=0):
    """Reposition the first two same-direction vehicles of `base` into a
    convoy whose rectangles overlap by `overlap_fraction` of one vehicle's
    area. overlap 0 spaces them a full vehicle length apart instead. A
    positive vertical_gap_px moves the trailing vehicle to a lower lane
    (same x overlap, disjoint rows), which splits the merged blob the way
    a steeper viewpoint would."""
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    if vertical_gap_px < 0:
        raise ValueError(f"vertical_gap_px must be >= 0, got {vertical_gap_px}")
    pair = None
    for i in range(len(base.vehicles)):
        for j in range(i + 1, len(base.vehicles)):
            if base.vehicles[i].direction == base.vehicles[j].direction:
                pair = (i, j)
                break
        if pair:
            break
    if pair is None:
        raise ValueError("scene needs two vehicles sharing a direction")
    i, j = pair
    lead = base.vehicles[i]
    if overlap_fraction > 0:
        offset_px = max(1, round(lead.length_px * (1.0 - overlap_fraction)))
    else:
        offset_px = 2 * lead.length_px
    entry_delta = max(1, round(offset_px / lead.speed))
    trail = replace(
        lead,
        entry_frame=lead.entry_frame + entry_delta,
        lane_top=lead.lane_top + (lead.height_px + vertical_gap_px if vertical_gap_px else 0),
    )
    vehicles = list(base.vehicles)
    vehicles[j] = trail
    return replace(base, vehicles=tuple(vehicles))


def standard_scene(band="RGB", width=640, height=480, frame_count=750, seed=1234,
                   noise_sigma=2.0, vehicle_spacing=65, clutter=None):
    """Two-direction highway preset used by the experiment scripts and the
    end-to-end tests: south traffic moves left to right in an upper lane
    band, north traffic right to left below it, all inside the active
    region under the cutoff."""
    if band not in BANDS:
        raise ValueError(f"band must be one of {BANDS}, got '{band}'")
    south_poly = ((0.0, 280.0), (float(width), 280.0), (float(width), 348.0), (0.0, 348.0))
    north_poly = ((0.0, 352.0), (float(width), 352.0), (float(width), 420.0), (0.0, 420.0))
    # scale polygon rows for non-default heights
    if height != 480:
        sy = height / 480.0
        south_poly = tuple((x, y * sy) for x, y in south_poly)
        north_poly = tuple((x, y * sy) for x, y in north_poly)
    s_top = int(300 * (height / 480.0))
    n_top = int(370 * (height / 480.0))

    vehicles = []
    vid = 0
    entry = 5
    south_styles = ((3.0, 26, 12, 185.0), (3.0, 22, 11, 215.0))
    north_styles = ((4.0, 30, 12, 150.0), (4.0, 24, 11, 205.0))
    while entry < frame_count:
        s = south_styles[vid % 2]
        vehicles.append(VehicleSpec(entry_frame=entry, direction="south", lane_top=s_top,
                                    speed=s[0], length_px=s[1], height_px=s[2],
                                    intensity=s[3]))
        n = north_styles[vid % 2]
        vehicles.append(VehicleSpec(entry_frame=entry + vehicle_spacing // 2,
                                    direction="north", lane_top=n_top,
                                    speed=n[0], length_px=n[1], height_px=n[2],
                                    intensity=n[3]))
        vid += 1
        entry += vehicle_spacing

    if clutter is not None:
        band_model = BandModel(band=band, noise_sigma=noise_sigma, clutter=tuple(clutter))
    elif band == "IR":
        band_model = ir_band_model(width, height, noise_sigma=noise_sigma)
    else:
        band_model = rgb_band_model(noise_sigma=noise_sigma)

    return SceneConfig(
        width=width, height=height, frame_count=frame_count, seed=seed,
        background=Background(mode="flat", intensity=80.0),
        vehicles=tuple(vehicles),
        band_model=band_model,
        cutoff_fraction=DEFAULT_CUTOFF_FRACTION,
        direction_polygons={"south": south_poly, "north": north_poly},
        direction_motion={"south": 1, "north": -1},
    )
