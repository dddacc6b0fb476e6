"""Cuff-display transcription: render and read seven-segment LCD panels.

The renderer and the decoder share one set of layout constants (segment
geometry, probe points, on/off threshold), which is what makes the
render -> transcribe round trip a genuine oracle rather than two halves that
merely agree by luck. Localization is behind a small detector interface so a
learned model can replace the classical reference without touching the
decoding stages.
"""
from __future__ import annotations

import importlib
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from scipy import ndimage

from .errors import (NoLcdFound, OutOfRangeValue, RowSplitFailure,
                     UndecodablePattern)

# ---------------------------------------------------------------------------
# Shared layout constants (renderer and decoder must agree on all of these)
# ---------------------------------------------------------------------------

BACKGROUND_LEVEL = 20
PANEL_LEVEL = 230
INK_LEVEL = 40

PANEL_MARGIN = 0.10        # image fraction left around the panel
ROW_FRACTION = 0.26        # cell height as a fraction of panel height
ROW_GAP = 0.055            # vertical gap between rows (and outer margin)
CELL_ASPECT = 0.55         # cell width / cell height
SLOT_PITCH = 1.25          # digit slot pitch in cell widths
RIGHT_MARGIN = 0.05        # panel fraction right of the ones digit

H_BAR_SPAN = (0.15, 0.85)  # horizontal segment x extent (cell fraction)
H_BAR_THICK = 0.12         # horizontal segment thickness (cell height fraction)
V_BAR_THICK = 0.20         # vertical segment thickness (cell width fraction)

# Ink extents implied by the bars above; the decoder uses them to rebuild a
# full cell box from a tight ink bounding box.
INK_X_MIN, INK_X_MAX = 0.05, 0.95
INK_Y_MIN, INK_Y_MAX = 0.04, 0.96

# Probe points, normalized to the cell box.
PROBE_POINTS = {
    "a": (0.50, 0.10),
    "b": (0.85, 0.30),
    "c": (0.85, 0.70),
    "d": (0.50, 0.90),
    "e": (0.15, 0.70),
    "f": (0.15, 0.30),
    "g": (0.50, 0.50),
}
# Segment-free interior points used as the background reference.
BACKGROUND_POINTS = ((0.50, 0.30), (0.50, 0.70))

PROBE_REF_SIDE = 11        # probe patch side at the reference cell height
PROBE_REF_CELL_H = 128
ON_THRESHOLD = 0.5         # fraction of cell dynamic range

DIGIT_TO_PATTERN: dict[int, frozenset] = {
    0: frozenset("abcdef"),
    1: frozenset("bc"),
    2: frozenset("abged"),
    3: frozenset("abgcd"),
    4: frozenset("fgbc"),
    5: frozenset("afgcd"),
    6: frozenset("afgedc"),
    7: frozenset("abc"),
    8: frozenset("abcdefg"),
    9: frozenset("abcfgd"),
}
PATTERN_TO_DIGIT = {pattern: digit for digit, pattern in DIGIT_TO_PATTERN.items()}

_NARROW_RUN_RATIO = 0.27   # ink runs narrower than this x band height are '1'-like


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.dtype != np.uint8:
            raise ValueError("pixels must be a 2-D uint8 array")
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class LcdRegion:
    """Panel bounding box in image coordinates."""

    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class BpReading:
    systolic_mmhg: int
    diastolic_mmhg: int
    pulse_bpm: int
    valid: bool
    reason: str | None
    digit_patterns: tuple[tuple[frozenset, ...], ...]


@runtime_checkable
class LcdDetector(Protocol):
    name: str

    def locate(self, image: GrayImage) -> LcdRegion:
        ...


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _segment_rects(segment: str) -> tuple[float, float, float, float]:
    """Normalized (x1, y1, x2, y2) of a segment bar within its cell."""
    x_lo, x_hi = H_BAR_SPAN
    half_h = H_BAR_THICK / 2.0
    half_v = V_BAR_THICK / 2.0
    if segment == "a":
        return (x_lo, 0.10 - half_h, x_hi, 0.10 + half_h)
    if segment == "g":
        return (x_lo, 0.50 - half_h, x_hi, 0.50 + half_h)
    if segment == "d":
        return (x_lo, 0.90 - half_h, x_hi, 0.90 + half_h)
    if segment == "b":
        return (0.85 - half_v, 0.10, 0.85 + half_v, 0.50)
    if segment == "c":
        return (0.85 - half_v, 0.50, 0.85 + half_v, 0.90)
    if segment == "f":
        return (0.15 - half_v, 0.10, 0.15 + half_v, 0.50)
    if segment == "e":
        return (0.15 - half_v, 0.50, 0.15 + half_v, 0.90)
    raise ValueError(f"unknown segment {segment!r}")


def _draw_digit(canvas: np.ndarray, digit: int,
                cell_x: float, cell_y: float, cell_w: float, cell_h: float) -> None:
    for segment in DIGIT_TO_PATTERN[digit]:
        fx1, fy1, fx2, fy2 = _segment_rects(segment)
        x1 = round(cell_x + fx1 * cell_w)
        x2 = round(cell_x + fx2 * cell_w)
        y1 = round(cell_y + fy1 * cell_h)
        y2 = round(cell_y + fy2 * cell_h)
        canvas[y1:max(y2, y1 + 1), x1:max(x2, x1 + 1)] = INK_LEVEL


def render_lcd(systolic: int, diastolic: int, pulse: int,
               width: int = 480, height: int = 300) -> GrayImage:
    """Deterministic synthetic cuff display: three right-aligned value rows.

    Values show without leading zeros (0 renders as a single '0'). Output is
    a plain uint8 raster: background 20, panel 230, lit segments 40.
    """
    for name, value in (("systolic", systolic), ("diastolic", diastolic), ("pulse", pulse)):
        if not isinstance(value, (int, np.integer)) or not 0 <= int(value) <= 999:
            raise OutOfRangeValue(f"{name} value {value!r} not displayable (0..999)")
    if width < 128 or height < 96:
        raise OutOfRangeValue("render size too small to resolve segments (min 128x96)")
    if not 1.0 <= width / height <= 3.0:
        raise OutOfRangeValue("width/height must lie in [1, 3]")

    canvas = np.full((height, width), BACKGROUND_LEVEL, dtype=np.uint8)
    px1 = round(PANEL_MARGIN * width)
    py1 = round(PANEL_MARGIN * height)
    px2 = round((1.0 - PANEL_MARGIN) * width)
    py2 = round((1.0 - PANEL_MARGIN) * height)
    canvas[py1:py2, px1:px2] = PANEL_LEVEL

    panel_w = px2 - px1
    panel_h = py2 - py1
    cell_h = ROW_FRACTION * panel_h
    cell_w = CELL_ASPECT * cell_h
    pitch = SLOT_PITCH * cell_w

    for row, value in enumerate((systolic, diastolic, pulse)):
        digits = [int(ch) for ch in str(int(value))]
        cell_y = py1 + (ROW_GAP + row * (ROW_FRACTION + ROW_GAP)) * panel_h
        right_edge = px2 - RIGHT_MARGIN * panel_w
        for place, digit in enumerate(reversed(digits)):
            cell_x = right_edge - place * pitch - cell_w
            _draw_digit(canvas, digit, cell_x, cell_y, cell_w, cell_h)
    return GrayImage(pixels=canvas)


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------

def _otsu_threshold(pixels: np.ndarray) -> int | None:
    """Threshold maximizing between-class variance; None for flat images."""
    hist = np.bincount(pixels.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if total == 0:
        return None
    prob = hist / total
    omega = np.cumsum(prob)
    mu = np.cumsum(prob * np.arange(256))
    mu_total = mu[-1]
    denom = omega * (1.0 - omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = np.where(denom > 0, (mu_total * omega - mu) ** 2 / denom, 0.0)
    if not (sigma_b > 0).any():
        return None
    return int(np.argmax(sigma_b))


class ClassicalLcdDetector:
    """Otsu binarization + largest plausibly panel-shaped bright component.

    A panel candidate must be at least 30 px on each side with width/height
    in [1, 3]; among survivors the one with the most pixels wins.
    """

    name = "classical-v1"

    def locate(self, image: GrayImage) -> LcdRegion:
        threshold = _otsu_threshold(image.pixels)
        if threshold is None:
            raise NoLcdFound("image has no intensity contrast")
        mask = image.pixels > threshold
        labels, count = ndimage.label(mask)
        if count == 0:
            raise NoLcdFound("no bright region above threshold")
        sizes = np.bincount(labels.ravel())
        sizes[0] = 0
        best = None
        for label_id, box in enumerate(ndimage.find_objects(labels), start=1):
            if box is None:
                continue
            h = box[0].stop - box[0].start
            w = box[1].stop - box[1].start
            if h < 30 or w < 30 or not 1.0 <= w / h <= 3.0:
                continue
            size = int(sizes[label_id])
            if best is None or size > best[0]:
                best = (size, box)
        if best is None:
            raise NoLcdFound("no component passed the panel shape gates")
        box = best[1]
        return LcdRegion(x=int(box[1].start), y=int(box[0].start),
                         w=int(box[1].stop - box[1].start),
                         h=int(box[0].stop - box[0].start))


def locate_lcd(image: GrayImage, detector: LcdDetector | None = None) -> LcdRegion:
    return (detector or ClassicalLcdDetector()).locate(image)


def get_detector(name: str) -> LcdDetector:
    """Resolve a detector by registry name or 'module:attr' import path."""
    if name == ClassicalLcdDetector.name:
        return ClassicalLcdDetector()
    if ":" in name:
        mod_name, attr = name.split(":", 1)
        obj = getattr(importlib.import_module(mod_name), attr)
        if callable(obj) and not hasattr(obj, "locate"):
            obj = obj()
        if not hasattr(obj, "locate"):
            raise NoLcdFound(f"{name} does not provide locate(image)")
        return obj
    raise NoLcdFound(f"unknown detector {name!r}")


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def _patch_mean(pixels: np.ndarray, fx: float, fy: float, side: int) -> float:
    h, w = pixels.shape
    cx = round(fx * w)
    cy = round(fy * h)
    half = side // 2
    x1 = max(cx - half, 0)
    y1 = max(cy - half, 0)
    x2 = min(cx + half + 1, w)
    y2 = min(cy + half + 1, h)
    if x2 <= x1 or y2 <= y1:
        return float(pixels[min(cy, h - 1), min(cx, w - 1)])
    return float(pixels[y1:y2, x1:x2].mean())


def read_pattern(cell: GrayImage) -> frozenset:
    """Probe the seven segment sites of one digit cell.

    A segment is on when its probe patch departs from the cell's background
    reference by more than half the cell's dynamic range.
    """
    pixels = cell.pixels
    side = max(3, round(PROBE_REF_SIDE * pixels.shape[0] / PROBE_REF_CELL_H))
    background = np.mean([_patch_mean(pixels, fx, fy, side) for fx, fy in BACKGROUND_POINTS])
    swing = ON_THRESHOLD * (float(pixels.max()) - float(pixels.min()))
    if swing <= 0:
        return frozenset()
    lit = set()
    for segment, (fx, fy) in PROBE_POINTS.items():
        if abs(_patch_mean(pixels, fx, fy, side) - background) > swing:
            lit.add(segment)
    return frozenset(lit)


def decode_digit(cell: GrayImage) -> int:
    """Decode one digit cell; UndecodablePattern when probes match no digit."""
    pattern = read_pattern(cell)
    try:
        return PATTERN_TO_DIGIT[pattern]
    except KeyError:
        raise UndecodablePattern(pattern) from None


def _runs(profile: np.ndarray, min_len: int, floor: float = 0.0) -> list[tuple[int, int]]:
    """Maximal [start, stop) runs of profile entries above ``floor``.

    Real display structure projects tens of dark pixels per row or column;
    speckle that survives the median filter projects one or two. A floor of
    a few percent of the profile peak separates the two regimes.
    """
    active = profile > floor
    runs = []
    start = None
    for i, flag in enumerate(active):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start >= min_len:
                runs.append((start, i))
            start = None
    if start is not None and active.size - start >= min_len:
        runs.append((start, active.size))
    return runs


def _trim_border(dark: np.ndarray) -> tuple[int, int, int, int]:
    """Shrink away border rows/cols that are mostly dark (outside the panel).

    Detectors are allowed a few pixels of slack around the true panel; any
    background they include shows up as near-fully-dark margins.
    """
    top, bottom = 0, dark.shape[0]
    left, right = 0, dark.shape[1]
    while bottom - top > 2 and dark[top, left:right].mean() > 0.6:
        top += 1
    while bottom - top > 2 and dark[bottom - 1, left:right].mean() > 0.6:
        bottom -= 1
    while right - left > 2 and dark[top:bottom, left].mean() > 0.6:
        left += 1
    while right - left > 2 and dark[top:bottom, right - 1].mean() > 0.6:
        right -= 1
    return top, bottom, left, right


def _cell_box(run: tuple[int, int], band: tuple[int, int]) -> tuple[float, float, float, float]:
    """Rebuild the full cell box (x1, y1, w, h) from one ink run and its row band.

    The row band gives the vertical scale; the run's right edge anchors the
    cell horizontally because every digit lights at least one right-side bar.
    Narrow runs (a '1': just the right bars) take their width from the cell
    aspect instead of the ink extent.
    """
    band_h = band[1] - band[0]
    cell_h = band_h / (INK_Y_MAX - INK_Y_MIN)
    y1 = band[0] - INK_Y_MIN * cell_h
    run_w = run[1] - run[0]
    if run_w < _NARROW_RUN_RATIO * band_h:
        cell_w = CELL_ASPECT * cell_h
        x2 = run[1] + (1.0 - INK_X_MAX) * cell_w
        x1 = x2 - cell_w
    else:
        cell_w = run_w / (INK_X_MAX - INK_X_MIN)
        x1 = run[0] - INK_X_MIN * cell_w
    return x1, y1, cell_w, cell_h


def validate_reading(systolic: int, diastolic: int, pulse: int,
                     pulse_present: bool) -> tuple[bool, str | None]:
    """Physiological plausibility gates, checked in a fixed order."""
    if not 60 <= systolic <= 260:
        return False, "systolic_out_of_range"
    if not 30 <= diastolic <= 160:
        return False, "diastolic_out_of_range"
    if systolic <= diastolic:
        return False, "systolic_not_greater"
    if not pulse_present:
        return False, "pulse_missing"
    if not 30 <= pulse <= 220:
        return False, "pulse_out_of_range"
    return True, None


def transcribe_bp(image: GrayImage, detector: LcdDetector | None = None) -> BpReading:
    """Read systolic/diastolic/pulse off a cuff display photo.

    Pipeline: locate panel, denoise the crop, split rows then digit cells by
    projection valleys, probe each cell. Three rows are expected
    (systolic / diastolic / pulse, top to bottom); a two-row display yields a
    pulse of 0 and an invalid reading.
    """
    region = locate_lcd(image, detector)
    crop = image.pixels[region.y:region.y + region.h, region.x:region.x + region.w]
    crop = ndimage.median_filter(crop, size=3)
    lo, hi = int(crop.min()), int(crop.max())
    if hi - lo < 16:
        raise RowSplitFailure("no legible contrast inside the panel")
    dark = crop < (lo + hi) / 2.0

    top, bottom, left, right = _trim_border(dark)
    ink = dark[top:bottom, left:right]

    row_profile = ink.sum(axis=1)
    bands = _runs(row_profile, min_len=4, floor=0.02 * float(row_profile.max()))
    if len(bands) not in (2, 3):
        raise RowSplitFailure(f"expected 2 or 3 display rows, found {len(bands)}")

    values = []
    patterns = []
    for row_index, band in enumerate(bands):
        band_ink = ink[band[0]:band[1], :]
        col_profile = band_ink.sum(axis=0)
        runs = _runs(col_profile, min_len=2, floor=0.02 * float(col_profile.max()))
        if not runs:
            raise RowSplitFailure(f"display row {row_index} holds no digits")
        digits = []
        row_patterns = []
        for cell_index, run in enumerate(runs):
            x1, y1, cell_w, cell_h = _cell_box(run, band)
            cy1 = max(int(round(y1)) + top, 0)
            cy2 = min(int(round(y1 + cell_h)) + top, crop.shape[0])
            cx1 = max(int(round(x1)) + left, 0)
            cx2 = min(int(round(x1 + cell_w)) + left, crop.shape[1])
            cell = GrayImage(pixels=np.ascontiguousarray(crop[cy1:cy2, cx1:cx2]))
            pattern = read_pattern(cell)
            if pattern not in PATTERN_TO_DIGIT:
                raise UndecodablePattern(pattern, row=row_index, cell=cell_index)
            digits.append(PATTERN_TO_DIGIT[pattern])
            row_patterns.append(pattern)
        values.append(int("".join(str(d) for d in digits)))
        patterns.append(tuple(row_patterns))

    pulse_present = len(bands) == 3
    systolic, diastolic = values[0], values[1]
    pulse = values[2] if pulse_present else 0
    valid, reason = validate_reading(systolic, diastolic, pulse, pulse_present)
    return BpReading(systolic_mmhg=systolic, diastolic_mmhg=diastolic, pulse_bpm=pulse,
                     valid=valid, reason=reason, digit_patterns=tuple(patterns))
