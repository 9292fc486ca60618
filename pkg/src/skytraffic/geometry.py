"""Scenario and sensor geometry for a camera hovering beside a road.

Conventions: distances in feet, angles in degrees, image quantities in
pixels. Image rows grow downward; a pixel (row r, col c) covers the unit
square with center (c + 0.5, r + 0.5). Boxes are half-open
(x_min, y_min, x_max, y_max) rectangles so width is x_max - x_min.
"""

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_CUTOFF_FRACTION = 0.4
DEFAULT_ROAD_OFFSET_FT = 100.0
DEFAULT_VEHICLE_LENGTH_FT = 15.0
DEFAULT_VEHICLE_WIDTH_FT = 6.0


def slant_range(height_above_road, road_offset):
    """Line-of-sight distance from the camera to the observed road point
    for a camera hovering height_above_road feet up and road_offset feet
    to the side."""
    return math.hypot(float(height_above_road), float(road_offset))


def required_launch_altitude(target_height, road_minus_launch_elevation):
    """Altitude to command at the launch point so the camera ends up
    target_height feet above the road.

    road_minus_launch_elevation is (road elevation - launch ground
    elevation) in feet; a road below the launch point gives a negative
    delta.
    """
    if target_height <= 0:
        raise ValueError(f"target height must be > 0 ft, got {target_height}")
    altitude = float(target_height) + float(road_minus_launch_elevation)
    if altitude <= 0:
        raise ValueError(
            f"required launch altitude {altitude} ft is not positive "
            f"(target {target_height} ft, elevation delta "
            f"{road_minus_launch_elevation} ft)")
    return altitude


@dataclass(frozen=True)
class ScenarioGeometry:
    """One camera placement.

    drone_speed is recorded for provenance only; the detection pipeline
    assumes a stationary camera.
    """

    height_above_road: float
    road_offset: float = DEFAULT_ROAD_OFFSET_FT
    azimuth_deg: float = 90.0
    depression_deg: float = 45.0
    fov_length: float | None = None
    drone_speed: float = 0.0

    def __post_init__(self):
        if not self.height_above_road > 0:
            raise ValueError(f"height_above_road must be > 0, got {self.height_above_road}")
        if self.road_offset < 0:
            raise ValueError(f"road_offset must be >= 0, got {self.road_offset}")
        if not 0.0 <= self.azimuth_deg <= 180.0:
            raise ValueError(f"azimuth_deg must be in [0, 180], got {self.azimuth_deg}")
        if not 0.0 < self.depression_deg <= 90.0:
            raise ValueError(f"depression_deg must be in (0, 90], got {self.depression_deg}")
        if self.fov_length is not None and not self.fov_length > 0:
            raise ValueError(f"fov_length must be > 0, got {self.fov_length}")
        if self.drone_speed < 0:
            raise ValueError(f"drone_speed must be >= 0, got {self.drone_speed}")

    @property
    def slant_range(self):
        return slant_range(self.height_above_road, self.road_offset)


def expected_vehicle_area_px(geom, focal_length_px,
                             vehicle_length_ft=DEFAULT_VEHICLE_LENGTH_FT,
                             vehicle_width_ft=DEFAULT_VEHICLE_WIDTH_FT):
    """Pinhole estimate of the pixel area of one vehicle at the scenario's
    slant range. Scales with the inverse square of the range."""
    if focal_length_px <= 0:
        raise ValueError(f"focal_length_px must be > 0, got {focal_length_px}")
    if vehicle_length_ft < 0 or vehicle_width_ft < 0:
        raise ValueError("vehicle dimensions must be >= 0, got "
                         f"{vehicle_length_ft} x {vehicle_width_ft}")
    scale = focal_length_px / geom.slant_range
    return vehicle_length_ft * vehicle_width_ft * scale * scale


@dataclass(frozen=True)
class RoiSpec:
    """Detection region: per-direction polygons plus a horizontal cutoff.

    Rows with index < ceil(cutoff_fraction * frame_height) are excluded
    regardless of the polygons; detection happens only on the lower band
    of the image where the road fills the view. Polygons are vertex lists
    in pixel coordinates and must not overlap once rasterized.
    """

    direction_polygons: dict = field(default_factory=dict)
    cutoff_fraction: float = DEFAULT_CUTOFF_FRACTION

    def __post_init__(self):
        if not 0.0 <= self.cutoff_fraction < 1.0:
            raise ValueError(f"cutoff_fraction must be in [0, 1), got {self.cutoff_fraction}")
        for name, poly in self.direction_polygons.items():
            if len(poly) < 3:
                raise ValueError(f"direction polygon '{name}' needs >= 3 vertices, got {len(poly)}")

    @property
    def directions(self):
        return list(self.direction_polygons)


def cutoff_row(cutoff_fraction, frame_height):
    """First active row index under the cutoff rule."""
    return math.ceil(cutoff_fraction * frame_height)


def rasterize_polygon(frame_width, frame_height, polygon):
    """Even-odd rasterization: a pixel is inside when its center is
    inside the polygon."""
    px = np.arange(frame_width, dtype=np.float64) + 0.5
    py = (np.arange(frame_height, dtype=np.float64) + 0.5)[:, None]
    inside = np.zeros((frame_height, frame_width), dtype=bool)
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > py) != (y2 > py)
        xint = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        inside ^= crosses & (px[None, :] < xint)
    return inside


def build_roi_mask(frame_width, frame_height, roi, direction):
    if frame_width <= 0 or frame_height <= 0:
        raise ValueError(f"frame dims must be positive, got {frame_width}x{frame_height}")
    if direction not in roi.direction_polygons:
        raise ValueError(
            f"unknown direction '{direction}'; configured: {sorted(roi.direction_polygons)}")
    mask = rasterize_polygon(frame_width, frame_height, roi.direction_polygons[direction])
    mask[:cutoff_row(roi.cutoff_fraction, frame_height), :] = False
    return mask


def build_all_roi_masks(frame_width, frame_height, roi):
    """Masks for every direction, checked pairwise disjoint."""
    masks = {d: build_roi_mask(frame_width, frame_height, roi, d)
             for d in roi.direction_polygons}
    names = sorted(masks)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if (masks[a] & masks[b]).any():
                raise ValueError(f"direction polygons '{a}' and '{b}' overlap after rasterization")
    return masks


def full_frame_polygon(frame_width, frame_height):
    return ((0.0, 0.0), (float(frame_width), 0.0),
            (float(frame_width), float(frame_height)), (0.0, float(frame_height)))


@dataclass(frozen=True)
class Scenario:
    """One expanded grid cell: a geometry plus a sensor band."""

    geometry: ScenarioGeometry
    band: str

    @property
    def label(self):
        return (f"{self.band.lower()}-h{self.geometry.height_above_road:g}"
                f"-az{self.geometry.azimuth_deg:g}")


@dataclass(frozen=True)
class ScenarioGrid:
    """Cartesian capture plan.

    depressions pair with azimuths position-wise (each azimuth was flown
    at one depression setting); a single depression broadcasts to all
    azimuths. speeds multiply the expansion but default to the stationary
    case, which is what the detection pipeline consumes.
    """

    heights: tuple
    azimuths: tuple
    depressions: tuple
    bands: tuple
    road_offset: float = DEFAULT_ROAD_OFFSET_FT
    speeds: tuple = (0.0,)
    traffic: str = "free-flow"

    def __post_init__(self):
        for name in ("heights", "azimuths", "depressions", "bands", "speeds"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"grid axis '{name}' is empty")
        if len(self.depressions) not in (1, len(self.azimuths)):
            raise ValueError(
                f"depressions must have 1 or {len(self.azimuths)} entries, "
                f"got {len(self.depressions)}")


def expand_grid(grid):
    """Expand to scenarios: heights x azimuths x bands (x speeds)."""
    deps = grid.depressions
    if len(deps) == 1:
        deps = deps * len(grid.azimuths)
    out = []
    for h in grid.heights:
        for az, dep in zip(grid.azimuths, deps):
            for band in grid.bands:
                for speed in grid.speeds:
                    out.append(Scenario(
                        geometry=ScenarioGeometry(
                            height_above_road=h, road_offset=grid.road_offset,
                            azimuth_deg=az, depression_deg=dep, drone_speed=speed),
                        band=band))
    return out
