"""Binary mask cleanup and region extraction.

Masks are 2-D boolean arrays, 1 = foreground. Morphology uses a flat
rectangular structuring element anchored at its center; everything outside
the frame counts as background for both erosion and dilation, so
foreground touching the border erodes away and never dilates outward.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

_EIGHT_CONNECTED = np.ones((3, 3), dtype=np.int32)


@dataclass(frozen=True)
class StructuringElement:
    """Flat rectangle, odd dimensions so the anchor is the center pixel."""

    height: int = 3
    width: int = 3

    def __post_init__(self):
        for v in (self.height, self.width):
            if v < 1 or v % 2 == 0:
                raise ValueError(f"structuring element dims must be odd and >= 1, got "
                                 f"{self.height}x{self.width}")


DEFAULT_SE = StructuringElement(3, 3)


def _as_mask(mask):
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {m.shape}")
    return m.astype(bool, copy=False)


def _window_reduce(mask, se, all_of):
    h, w = mask.shape
    rh, rw = se.height // 2, se.width // 2
    padded = np.zeros((h + 2 * rh, w + 2 * rw), dtype=bool)
    padded[rh:rh + h, rw:rw + w] = mask
    if all_of:
        out = np.ones((h, w), dtype=bool)
        for dy in range(se.height):
            for dx in range(se.width):
                out &= padded[dy:dy + h, dx:dx + w]
    else:
        out = np.zeros((h, w), dtype=bool)
        for dy in range(se.height):
            for dx in range(se.width):
                out |= padded[dy:dy + h, dx:dx + w]
    return out


def erode(mask, se=DEFAULT_SE, iterations=1):
    """Keep a pixel only when every bit under the element is set."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    out = _as_mask(mask)
    for _ in range(iterations):
        out = _window_reduce(out, se, all_of=True)
    return out


def dilate(mask, se=DEFAULT_SE, iterations=1):
    """Set a pixel when any bit under the element is set."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    out = _as_mask(mask)
    for _ in range(iterations):
        out = _window_reduce(out, se, all_of=False)
    return out


def opening(mask, se=DEFAULT_SE, iterations=1):
    """Erode then dilate, repeated. Removes specks smaller than the element."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    out = _as_mask(mask)
    for _ in range(iterations):
        out = _window_reduce(_window_reduce(out, se, all_of=True), se, all_of=False)
    return out


def closing(mask, se=DEFAULT_SE, iterations=1):
    """Dilate then erode, repeated. Fills gaps smaller than the element."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    out = _as_mask(mask)
    for _ in range(iterations):
        out = _window_reduce(_window_reduce(out, se, all_of=False), se, all_of=True)
    return out


@dataclass(frozen=True)
class Region:
    """One 8-connected foreground component.

    pixels: (n, 2) array of (row, col), raster order
    bbox:   half-open (x_min, y_min, x_max, y_max)
    centroid: (row, col) means of the pixel coordinates
    """

    pixels: np.ndarray
    area: int
    bbox: tuple
    centroid: tuple


@dataclass(frozen=True)
class Detection:
    """A region that passed the size and location gates."""

    frame_index: int
    direction: str
    box: tuple
    area: int


def connected_components(mask):
    """Regions of the mask under 8-connectivity, ordered by first pixel in
    raster order."""
    mask = _as_mask(mask)
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    rows, cols = np.nonzero(mask)
    ids = labels[rows, cols]
    order = np.argsort(ids, kind="stable")
    rows, cols, ids = rows[order], cols[order], ids[order]
    bounds = np.searchsorted(ids, np.arange(1, count + 2))
    regions = []
    for k in range(count):
        lo, hi = bounds[k], bounds[k + 1]
        r = rows[lo:hi]
        c = cols[lo:hi]
        pixels = np.column_stack((r, c))
        regions.append(Region(
            pixels=pixels,
            area=int(pixels.shape[0]),
            bbox=(int(c.min()), int(r.min()), int(c.max()) + 1, int(r.max()) + 1),
            centroid=(float(r.mean()), float(c.mean())),
        ))
    return regions


def regions_to_detections(regions, min_area, roi_mask, frame_index=0, direction=""):
    """Keep regions with area >= min_area whose centroid pixel lies in the
    ROI mask. The centroid is truncated to the pixel containing it."""
    roi_mask = _as_mask(roi_mask)
    h, w = roi_mask.shape
    out = []
    for reg in regions:
        if reg.area < min_area:
            continue
        cr, cc = int(reg.centroid[0]), int(reg.centroid[1])
        if not (0 <= cr < h and 0 <= cc < w) or not roi_mask[cr, cc]:
            continue
        out.append(Detection(frame_index=frame_index, direction=direction,
                             box=reg.bbox, area=reg.area))
    return out
