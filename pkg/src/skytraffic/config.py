"""Run configuration: a YAML schema whose keys mirror the field campaign's
recording parameters (height_ft, azimuth_deg, depression_deg, offset_ft,
velocity_mph, band).

A run names exactly one input source (a frame directory or a synthetic
scene), one scenario or a scenario grid, optional pipeline overrides, and
output switches. Every validation error names the offending field path.
"""

from dataclasses import dataclass, field

import yaml

from .bgmodel import CLASSIFY_THRESHOLD_SQ_BY_BAND, MixtureParams
from .evaluate import DEFAULT_IOU_MIN, FrameSamplingPolicy
from .geometry import (DEFAULT_ROAD_OFFSET_FT, RoiSpec, Scenario, ScenarioGeometry,
                       ScenarioGrid, expand_grid)
from .maskops import StructuringElement
from .pipeline import PipelineConfig
from . import synth


class ConfigError(ValueError):
    def __init__(self, field_path, message):
        self.field = field_path
        super().__init__(f"config field '{field_path}': {message}")


def _require_map(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(mapping, allowed, path):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0],
                          f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _get_num(mapping, key, path, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}", "required")
        return default
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    return v


def _get_int(mapping, key, path, default=None, required=False):
    v = _get_num(mapping, key, path, default, required)
    if v is None:
        return None
    if v != int(v):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {v!r}")
    return int(v)


def _get_str(mapping, key, path, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}", "required")
        return default
    v = mapping[key]
    if not isinstance(v, str):
        raise ConfigError(f"{path}.{key}", f"expected a string, got {v!r}")
    return v


def _get_bool(mapping, key, path, default):
    if key not in mapping:
        return default
    v = mapping[key]
    if not isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", f"expected true/false, got {v!r}")
    return v


def _get_list(mapping, key, path, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}", "required")
        return None
    v = mapping[key]
    if not isinstance(v, (list, tuple)):
        raise ConfigError(f"{path}.{key}", f"expected a list, got {v!r}")
    return v


@dataclass
class RunConfig:
    scenarios: tuple
    sampling: FrameSamplingPolicy
    iou_min: float
    output_dir: str
    frames_dir: str = None
    scene: synth.SceneConfig = None
    scene_preset: dict = None  # reusable per-scenario scene recipe
    roi: RoiSpec = None
    roi_file: str = None
    pipeline_overrides: dict = field(default_factory=dict)
    emit_csv: bool = True
    emit_svg: bool = True
    emit_annotated: bool = False


_SCENARIO_KEYS = ("height_ft", "azimuth_deg", "depression_deg", "offset_ft",
                  "velocity_mph", "band", "fov_length_ft")
_GRID_KEYS = ("heights_ft", "azimuths_deg", "depressions_deg", "offset_ft",
              "velocities_mph", "bands", "traffic")
_PIPELINE_KEYS = ("max_components", "match_threshold_sq", "classify_threshold_sq",
                  "learning_rate", "background_ratio", "initial_variance",
                  "min_variance", "warmup_frames", "se", "open_iterations",
                  "close_iterations", "min_area", "focal_length_px",
                  "vehicle_length_ft", "vehicle_width_ft", "color_mode")


def _parse_scenario(doc, path):
    doc = _require_map(doc, path)
    _reject_unknown(doc, _SCENARIO_KEYS, path)
    band = _get_str(doc, "band", path, default="RGB")
    if band not in CLASSIFY_THRESHOLD_SQ_BY_BAND:
        raise ConfigError(f"{path}.band",
                          f"must be one of {sorted(CLASSIFY_THRESHOLD_SQ_BY_BAND)}, "
                          f"got '{band}'")
    try:
        geom = ScenarioGeometry(
            height_above_road=_get_num(doc, "height_ft", path, required=True),
            road_offset=_get_num(doc, "offset_ft", path, default=DEFAULT_ROAD_OFFSET_FT),
            azimuth_deg=_get_num(doc, "azimuth_deg", path, default=90.0),
            depression_deg=_get_num(doc, "depression_deg", path, default=45.0),
            fov_length=_get_num(doc, "fov_length_ft", path),
            drone_speed=_get_num(doc, "velocity_mph", path, default=0.0),
        )
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
    return Scenario(geometry=geom, band=band)


def _parse_grid(doc, path):
    doc = _require_map(doc, path)
    _reject_unknown(doc, _GRID_KEYS, path)
    bands = _get_list(doc, "bands", path) or ["RGB"]
    for b in bands:
        if b not in CLASSIFY_THRESHOLD_SQ_BY_BAND:
            raise ConfigError(f"{path}.bands", f"unknown band '{b}'")
    depressions = _get_list(doc, "depressions_deg", path) or [45.0]
    speeds = _get_list(doc, "velocities_mph", path) or [0.0]
    try:
        grid = ScenarioGrid(
            heights=tuple(_get_list(doc, "heights_ft", path, required=True)),
            azimuths=tuple(_get_list(doc, "azimuths_deg", path) or [90.0]),
            depressions=tuple(depressions),
            bands=tuple(bands),
            road_offset=_get_num(doc, "offset_ft", path, default=DEFAULT_ROAD_OFFSET_FT),
            speeds=tuple(speeds),
            traffic=_get_str(doc, "traffic", path, default="free-flow"),
        )
        return expand_grid(grid)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _parse_polygon(value, path):
    if not isinstance(value, (list, tuple)) or len(value) < 3:
        raise ConfigError(path, "expected a list of >= 3 [x, y] vertices")
    poly = []
    for i, v in enumerate(value):
        if (not isinstance(v, (list, tuple)) or len(v) != 2
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)):
            raise ConfigError(f"{path}[{i}]", f"expected [x, y], got {v!r}")
        poly.append((float(v[0]), float(v[1])))
    return tuple(poly)


def _parse_roi(doc, path, cutoff_default):
    doc = _require_map(doc, path)
    if "file" in doc:
        _reject_unknown(doc, ("file",), path)
        return None, _get_str(doc, "file", path, required=True)
    _reject_unknown(doc, ("cutoff_fraction", "directions"), path)
    dirs = _require_map(doc.get("directions"), f"{path}.directions")
    polys = {name: _parse_polygon(poly, f"{path}.directions.{name}")
             for name, poly in dirs.items()}
    try:
        roi = RoiSpec(direction_polygons=polys,
                      cutoff_fraction=_get_num(doc, "cutoff_fraction", path,
                                               default=cutoff_default))
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
    return roi, None


_SCENE_PRESET_KEYS = ("preset", "band", "width", "height", "frame_count", "seed",
                      "noise_sigma", "vehicle_spacing")
_SCENE_INLINE_KEYS = ("width", "height", "frame_count", "seed", "background",
                      "band", "vehicles", "cutoff_fraction", "directions")
_VEHICLE_KEYS = ("entry_frame", "direction", "lane_top", "speed", "length_px",
                 "height_px", "intensity")


def scene_from_preset(doc, band=None, path="input.scene"):
    """Instantiate the standard preset, optionally overriding the band."""
    name = doc.get("preset")
    if name != "standard":
        raise ConfigError(f"{path}.preset", f"unknown preset '{name}'")
    kwargs = dict(
        band=band if band is not None else _get_str(doc, "band", path, default="RGB"),
        width=_get_int(doc, "width", path, default=640),
        height=_get_int(doc, "height", path, default=480),
        frame_count=_get_int(doc, "frame_count", path, default=750),
        seed=_get_int(doc, "seed", path, default=1234),
        noise_sigma=_get_num(doc, "noise_sigma", path, default=2.0),
        vehicle_spacing=_get_int(doc, "vehicle_spacing", path, default=65),
    )
    try:
        return synth.standard_scene(**kwargs)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _parse_scene(doc, path):
    """(SceneConfig or None, preset recipe or None)."""
    doc = _require_map(doc, path)
    if "preset" in doc:
        _reject_unknown(doc, _SCENE_PRESET_KEYS, path)
        return scene_from_preset(doc, path=path), dict(doc)
    _reject_unknown(doc, _SCENE_INLINE_KEYS, path)
    bg_doc = doc.get("background", {})
    _reject_unknown(_require_map(bg_doc, f"{path}.background"),
                    ("mode", "intensity", "texture_amplitude"), f"{path}.background")
    band_doc = _require_map(doc.get("band", {}), f"{path}.band")
    _reject_unknown(band_doc, ("band", "noise_sigma", "clutter"), f"{path}.band")
    clutter = []
    for i, c in enumerate(_get_list(band_doc, "clutter", f"{path}.band") or []):
        cp = f"{path}.band.clutter[{i}]"
        c = _require_map(c, cp)
        _reject_unknown(c, ("box", "amplitude", "period", "phase"), cp)
        box = _get_list(c, "box", cp, required=True)
        if len(box) != 4:
            raise ConfigError(f"{cp}.box", f"expected [x0, y0, x1, y1], got {box!r}")
        try:
            clutter.append(synth.ClutterRegion(
                box=tuple(box), amplitude=_get_num(c, "amplitude", cp, required=True),
                period=_get_int(c, "period", cp, required=True),
                phase=_get_int(c, "phase", cp, default=0)))
        except ValueError as e:
            raise ConfigError(cp, str(e)) from None
    vehicles = []
    for i, v in enumerate(_get_list(doc, "vehicles", path) or []):
        vp = f"{path}.vehicles[{i}]"
        v = _require_map(v, vp)
        _reject_unknown(v, _VEHICLE_KEYS, vp)
        try:
            vehicles.append(synth.VehicleSpec(
                entry_frame=_get_int(v, "entry_frame", vp, required=True),
                direction=_get_str(v, "direction", vp, required=True),
                lane_top=_get_int(v, "lane_top", vp, required=True),
                speed=_get_num(v, "speed", vp, required=True),
                length_px=_get_int(v, "length_px", vp, required=True),
                height_px=_get_int(v, "height_px", vp, required=True),
                intensity=_get_num(v, "intensity", vp, required=True)))
        except ValueError as e:
            raise ConfigError(vp, str(e)) from None
    dirs = _require_map(doc.get("directions", {}), f"{path}.directions")
    polygons = {}
    motion = {}
    for name, d in dirs.items():
        dp = f"{path}.directions.{name}"
        d = _require_map(d, dp)
        _reject_unknown(d, ("polygon", "motion"), dp)
        polygons[name] = _parse_polygon(d.get("polygon"), f"{dp}.polygon")
        sign = _get_int(d, "motion", dp, required=True)
        if sign not in (-1, 1):
            raise ConfigError(f"{dp}.motion", f"must be 1 or -1, got {sign}")
        motion[name] = sign
    try:
        scene = synth.SceneConfig(
            width=_get_int(doc, "width", path, required=True),
            height=_get_int(doc, "height", path, required=True),
            frame_count=_get_int(doc, "frame_count", path, required=True),
            seed=_get_int(doc, "seed", path, default=0),
            background=synth.Background(
                mode=_get_str(bg_doc, "mode", f"{path}.background", default="flat"),
                intensity=_get_num(bg_doc, "intensity", f"{path}.background",
                                   default=80.0),
                texture_amplitude=_get_num(bg_doc, "texture_amplitude",
                                           f"{path}.background", default=0.0)),
            vehicles=tuple(vehicles),
            band_model=synth.BandModel(
                band=_get_str(band_doc, "band", f"{path}.band", default="RGB"),
                noise_sigma=_get_num(band_doc, "noise_sigma", f"{path}.band",
                                     default=2.0),
                clutter=tuple(clutter)),
            cutoff_fraction=_get_num(doc, "cutoff_fraction", path, default=0.4),
            direction_polygons=polygons,
            direction_motion=motion,
        )
        synth.validate_scene(scene)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
    return scene, None


_TOP_KEYS = ("input", "scenario", "grid", "pipeline", "roi", "sampling",
             "iou_min", "output_dir", "emit")


def parse_config(text):
    """RunConfig from YAML text with all defaults applied."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark else "document"
        raise ConfigError(where, f"invalid YAML: {e}") from None
    if doc is None:
        doc = {}
    doc = _require_map(doc, "top level")
    _reject_unknown(doc, _TOP_KEYS, "")

    inp = _require_map(doc.get("input") or {}, "input")
    _reject_unknown(inp, ("frames_dir", "scene"), "input")
    frames_dir = _get_str(inp, "frames_dir", "input")
    scene = preset = None
    if "scene" in inp:
        if frames_dir is not None:
            raise ConfigError("input", "give frames_dir or scene, not both")
        scene, preset = _parse_scene(inp["scene"], "input.scene")
    if frames_dir is None and scene is None:
        raise ConfigError("input", "an input source is required: frames_dir or scene")

    if "scenario" in doc and "grid" in doc:
        raise ConfigError("scenario", "give scenario or grid, not both")
    if "grid" in doc:
        scenarios = tuple(_parse_grid(doc["grid"], "grid"))
    elif "scenario" in doc:
        scenarios = (_parse_scenario(doc["scenario"], "scenario"),)
    else:
        band = scene.band_model.band if scene is not None else "RGB"
        scenarios = (Scenario(geometry=ScenarioGeometry(height_above_road=300.0),
                              band=band),)

    pipe = _require_map(doc.get("pipeline") or {}, "pipeline")
    _reject_unknown(pipe, _PIPELINE_KEYS, "pipeline")
    overrides = dict(pipe)
    if "se" in overrides:
        se = overrides["se"]
        if (not isinstance(se, (list, tuple)) or len(se) != 2
                or any(not isinstance(v, int) or isinstance(v, bool) for v in se)):
            raise ConfigError("pipeline.se", f"expected [height, width], got {se!r}")
    if "min_area" in overrides:
        ma = overrides["min_area"]
        if ma != "auto" and (isinstance(ma, bool) or not isinstance(ma, (int, float))):
            raise ConfigError("pipeline.min_area",
                              f"expected a number or 'auto', got {ma!r}")

    roi = roi_file = None
    if "roi" in doc:
        if scene is not None:
            raise ConfigError("roi", "a scene input defines its own regions; "
                              "roi is only for frames_dir input")
        roi, roi_file = _parse_roi(doc["roi"], "roi", cutoff_default=0.4)
    elif frames_dir is not None:
        raise ConfigError("roi", "required with frames_dir input")

    samp = _require_map(doc.get("sampling") or {}, "sampling")
    _reject_unknown(samp, ("start", "end", "step"), "sampling")
    try:
        sampling = FrameSamplingPolicy(
            start=_get_int(samp, "start", "sampling", default=200),
            end=_get_int(samp, "end", "sampling", default=700),
            step=_get_int(samp, "step", "sampling", default=5))
    except ValueError as e:
        raise ConfigError("sampling", str(e)) from None

    iou_min = _get_num(doc, "iou_min", "", default=DEFAULT_IOU_MIN)
    if not 0.0 < iou_min <= 1.0:
        raise ConfigError("iou_min", f"must be in (0, 1], got {iou_min}")

    emit = _require_map(doc.get("emit") or {}, "emit")
    _reject_unknown(emit, ("csv", "svg", "annotated_frames"), "emit")

    return RunConfig(
        scenarios=scenarios,
        sampling=sampling,
        iou_min=iou_min,
        output_dir=_get_str(doc, "output_dir", "", default="out"),
        frames_dir=frames_dir,
        scene=scene,
        scene_preset=preset,
        roi=roi,
        roi_file=roi_file,
        pipeline_overrides=overrides,
        emit_csv=_get_bool(emit, "csv", "emit", True),
        emit_svg=_get_bool(emit, "svg", "emit", True),
        emit_annotated=_get_bool(emit, "annotated_frames", "emit", False),
    )


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def build_pipeline_config(run, scenario, roi):
    """PipelineConfig for one scenario, filling band defaults."""
    ov = dict(run.pipeline_overrides)
    se = StructuringElement(*ov.pop("se")) if "se" in ov else StructuringElement()
    open_iters = ov.pop("open_iterations", 1)
    close_iters = ov.pop("close_iterations", 1)
    min_area = ov.pop("min_area", "auto")
    focal = ov.pop("focal_length_px", None)
    veh_l = ov.pop("vehicle_length_ft", 15.0)
    veh_w = ov.pop("vehicle_width_ft", 6.0)
    color_mode = ov.pop("color_mode", "luminance")
    ov.setdefault("classify_threshold_sq",
                  CLASSIFY_THRESHOLD_SQ_BY_BAND[scenario.band])
    try:
        mixture = MixtureParams(**ov)
        return PipelineConfig(
            roi=roi, mixture=mixture, band=scenario.band, se=se,
            open_iterations=open_iters, close_iterations=close_iters,
            min_area=min_area, geometry=scenario.geometry, focal_length_px=focal,
            vehicle_length_ft=veh_l, vehicle_width_ft=veh_w, color_mode=color_mode)
    except (TypeError, ValueError) as e:
        raise ConfigError("pipeline", str(e)) from None
