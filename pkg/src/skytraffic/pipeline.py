"""Per-direction vehicle detection over a frame sequence.

Each frame feeds one shared background model; the resulting foreground
mask is intersected with every direction's region mask, cleaned with an
opening then a closing, and grouped into connected components, which
become detections after the area and centroid filters. Segmentation runs
once per frame on the full frame so both directions see identical model
statistics; direction masks are applied to the output mask, not the
input.

The model is stateful, so frames must arrive in order and one pipeline
serves one sequence. Every frame updates the model and every frame is
logged; choosing the evaluation subset is the scorer's job.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from .bgmodel import (CLASSIFY_THRESHOLD_SQ_BY_BAND, MixtureModel, MixtureParams,
                      luminance)
from .geometry import (DEFAULT_VEHICLE_LENGTH_FT, DEFAULT_VEHICLE_WIDTH_FT,
                       ScenarioGeometry, build_all_roi_masks,
                       expected_vehicle_area_px, RoiSpec)
from .maskops import (DEFAULT_SE, StructuringElement, closing,
                      connected_components, opening, regions_to_detections)

AUTO_MIN_AREA_FRACTION = 0.25
COLOR_MODES = ("luminance", "rgb")


def params_for_band(band, **overrides):
    """MixtureParams with the band's default classification threshold."""
    if band not in CLASSIFY_THRESHOLD_SQ_BY_BAND:
        raise ValueError(f"band must be one of "
                         f"{sorted(CLASSIFY_THRESHOLD_SQ_BY_BAND)}, got '{band}'")
    overrides.setdefault("classify_threshold_sq", CLASSIFY_THRESHOLD_SQ_BY_BAND[band])
    return MixtureParams(**overrides)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the detector needs besides the frames themselves.

    min_area is a pixel-squared threshold or "auto", which derives
    0.25x the expected vehicle footprint from the scenario geometry and
    focal length. directions defaults to every direction the roi defines.
    """

    roi: RoiSpec
    mixture: MixtureParams = field(default_factory=MixtureParams)
    band: str = "RGB"
    directions: tuple = None
    se: StructuringElement = DEFAULT_SE
    open_iterations: int = 1
    close_iterations: int = 1
    min_area: object = "auto"
    geometry: ScenarioGeometry = None
    focal_length_px: float = None
    vehicle_length_ft: float = DEFAULT_VEHICLE_LENGTH_FT
    vehicle_width_ft: float = DEFAULT_VEHICLE_WIDTH_FT
    color_mode: str = "luminance"

    def __post_init__(self):
        if self.band not in CLASSIFY_THRESHOLD_SQ_BY_BAND:
            raise ValueError(f"band must be one of "
                             f"{sorted(CLASSIFY_THRESHOLD_SQ_BY_BAND)}, got '{self.band}'")
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color_mode must be one of {COLOR_MODES}, "
                             f"got '{self.color_mode}'")
        if self.open_iterations < 1 or self.close_iterations < 1:
            raise ValueError("morphology iteration counts must be >= 1, got "
                             f"open {self.open_iterations} close {self.close_iterations}")
        if self.directions is None:
            object.__setattr__(self, "directions", tuple(self.roi.directions))
        else:
            object.__setattr__(self, "directions", tuple(self.directions))
        if not self.directions:
            raise ValueError("pipeline needs at least one direction")
        unknown = [d for d in self.directions if d not in self.roi.direction_polygons]
        if unknown:
            raise ValueError(f"directions {unknown} have no polygon in the roi spec")
        resolve_min_area(self)  # fail at config time, not first frame


def resolve_min_area(config):
    """Numeric min_area, deriving the "auto" value from geometry."""
    if config.min_area != "auto":
        v = float(config.min_area)
        if v < 0:
            raise ValueError(f"min_area must be >= 0, got {v}")
        return v
    if config.geometry is None or config.focal_length_px is None:
        raise ValueError("min_area 'auto' needs geometry and focal_length_px")
    expected = expected_vehicle_area_px(
        config.geometry, config.focal_length_px,
        vehicle_length_ft=config.vehicle_length_ft,
        vehicle_width_ft=config.vehicle_width_ft)
    return AUTO_MIN_AREA_FRACTION * expected


@dataclass
class DetectionLog:
    """Per-frame detections (list index = frame index) plus the exact
    configuration that produced them."""

    width: int
    height: int
    directions: tuple
    config_snapshot: dict
    frames: list = field(default_factory=list)

    @property
    def frame_count(self):
        return len(self.frames)

    def detections(self, frame_index):
        return self.frames[frame_index]

    def boxes(self, frame_index, direction):
        return [d.box for d in self.frames[frame_index] if d.direction == direction]

    def all_detections(self):
        for dets in self.frames:
            yield from dets


class DetectionPipeline:
    """Stateful detector for one ordered frame sequence."""

    def __init__(self, config, first_frame):
        first_frame = np.asarray(first_frame)
        if first_frame.ndim not in (2, 3):
            raise ValueError(f"frames must be (H, W) or (H, W, 3), "
                             f"got shape {first_frame.shape}")
        self.config = config
        self.height, self.width = first_frame.shape[:2]
        self.min_area = resolve_min_area(config)
        masks = build_all_roi_masks(self.width, self.height, config.roi)
        self.roi_masks = {d: masks[d] for d in config.directions}
        self.model = MixtureModel(config.mixture, self._prep(first_frame))
        self.frame_index = 0

    def _prep(self, frame):
        if self.config.color_mode == "luminance":
            return luminance(frame) if frame.ndim == 3 else frame
        if frame.ndim != 3:
            raise ValueError("color_mode 'rgb' needs (H, W, 3) frames, "
                             f"got shape {frame.shape}")
        return frame

    def process(self, frame):
        """Feed one frame; per-direction detections for it."""
        frame = np.asarray(frame)
        if frame.shape[:2] != (self.height, self.width):
            raise ValueError(
                f"frame {self.frame_index} is {frame.shape[1]}x{frame.shape[0]}, "
                f"expected {self.width}x{self.height}")
        mask = self.model.apply(self._prep(frame)).view(np.bool_)
        out = {}
        for d in self.config.directions:
            masked = mask & self.roi_masks[d]
            morphed = closing(opening(masked, self.config.se, self.config.open_iterations),
                              self.config.se, self.config.close_iterations)
            regions = connected_components(morphed)
            out[d] = regions_to_detections(regions, self.min_area, self.roi_masks[d],
                                           frame_index=self.frame_index, direction=d)
        self.frame_index += 1
        return out

    def snapshot(self):
        """Serializable record of the effective configuration."""
        cfg = self.config
        return {
            "band": cfg.band,
            "color_mode": cfg.color_mode,
            "mixture": asdict(cfg.mixture),
            "se": [cfg.se.height, cfg.se.width],
            "open_iterations": cfg.open_iterations,
            "close_iterations": cfg.close_iterations,
            "min_area": self.min_area,
            "cutoff_fraction": cfg.roi.cutoff_fraction,
            "directions": list(cfg.directions),
            "geometry": None if cfg.geometry is None else {
                "height_above_road": cfg.geometry.height_above_road,
                "road_offset": cfg.geometry.road_offset,
                "azimuth_deg": cfg.geometry.azimuth_deg,
                "depression_deg": cfg.geometry.depression_deg,
            },
            "focal_length_px": cfg.focal_length_px,
        }


def process_frame(pipeline, frame):
    return pipeline.process(frame)


def run_sequence(config, frames):
    """Run the detector over an ordered frame source.

    The model is seeded from frame 0 and then updated by every frame,
    frame 0 included; all frames are logged.
    """
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("frame source is empty") from None
    pipeline = DetectionPipeline(config, first)
    log = DetectionLog(width=pipeline.width, height=pipeline.height,
                       directions=tuple(config.directions),
                       config_snapshot=pipeline.snapshot())
    frame = first
    while True:
        per_dir = pipeline.process(frame)
        log.frames.append([d for name in config.directions for d in per_dir[name]])
        frame = next(it, None)
        if frame is None:
            break
    return log
