"""Fixed-camera aerial traffic detection toolkit.

Adaptive per-pixel mixture background subtraction, binary mask cleanup,
per-direction detection over road regions, a deterministic synthetic
scene generator with exact ground truth, and IoU-based scoring, plus a
CLI that ties them together.
"""

from .bgmodel import (CLASSIFY_THRESHOLD_SQ_BY_BAND, MixtureModel, MixtureParams,
                      init_model, luminance)
from .evaluate import (DEFAULT_IOU_MIN, FrameSamplingPolicy, MatchResult,
                       MetricsRecord, PerFrameCounts, aggregate, fixture_check,
                       iou, match_frame, metrics_from_counts, round_half_away,
                       sample_frames, score_frames)
from .geometry import (DEFAULT_CUTOFF_FRACTION, RoiSpec, Scenario,
                       ScenarioGeometry, ScenarioGrid, build_all_roi_masks,
                       build_roi_mask, cutoff_row, expand_grid,
                       expected_vehicle_area_px, rasterize_polygon,
                       required_launch_altitude, slant_range)
from .maskops import (DEFAULT_SE, Detection, Region, StructuringElement, closing,
                      connected_components, dilate, erode, opening,
                      regions_to_detections)
from .pipeline import (DetectionLog, DetectionPipeline, PipelineConfig,
                       params_for_band, process_frame, run_sequence)
from .synth import (BandModel, Background, ClutterRegion, FrameSequence,
                    GroundTruthLog, SceneConfig, VehicleSpec, generate,
                    ir_band_model, occlusion_scene, rgb_band_model,
                    standard_scene)

__version__ = "0.1.0"

__all__ = [
    "BandModel", "Background", "CLASSIFY_THRESHOLD_SQ_BY_BAND", "ClutterRegion",
    "DEFAULT_CUTOFF_FRACTION", "DEFAULT_IOU_MIN", "DEFAULT_SE", "Detection",
    "DetectionLog", "DetectionPipeline", "FrameSamplingPolicy", "FrameSequence",
    "GroundTruthLog", "MatchResult", "MetricsRecord", "MixtureModel",
    "MixtureParams", "PerFrameCounts", "PipelineConfig", "Region", "RoiSpec",
    "Scenario", "ScenarioGeometry", "ScenarioGrid", "SceneConfig",
    "StructuringElement", "VehicleSpec", "aggregate", "build_all_roi_masks",
    "build_roi_mask", "closing", "connected_components", "cutoff_row", "dilate",
    "erode", "expand_grid", "expected_vehicle_area_px", "fixture_check",
    "generate", "init_model", "iou", "ir_band_model", "luminance", "match_frame",
    "metrics_from_counts", "occlusion_scene", "opening", "params_for_band",
    "process_frame", "rasterize_polygon", "regions_to_detections",
    "required_launch_altitude", "rgb_band_model", "round_half_away",
    "run_sequence", "sample_frames", "score_frames", "slant_range",
    "standard_scene",
]
