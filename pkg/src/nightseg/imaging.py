"""Image and label-map I/O, resizing, and value-range handling.

All functions here are pure: they never mutate their inputs and hold no
shared state, so they are safe to call concurrently from worker processes.

Conventions:
  - Images are (H, W, 3) float32 arrays in RGB order, tagged with the value
    range they occupy ("unit" = [0, 1], "signed" = [-1, 1]).
  - Label maps are (H, W) uint8 arrays of class indices in [0, K-1] with
    255 reserved as the ignore value.
  - The on-disk format is 8-bit PNG for both (JPEG is accepted on read).
  - Image resizing is bilinear with half-pixel-center sampling (no
    align-corners); label resizing is nearest-neighbor only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    InvalidClassValue,
    InvalidSize,
    MissingFile,
    RangeTagMismatch,
    ShapeError,
)

IGNORE = 255

RANGES = {"unit": (0.0, 1.0), "signed": (-1.0, 1.0)}


@dataclass
class ImageTensor:
    """An (H, W, 3) float32 RGB image with a declared value range."""

    data: np.ndarray
    range_tag: str = "unit"

    def __post_init__(self):
        if self.range_tag not in RANGES:
            raise RangeTagMismatch(f"unknown range tag {self.range_tag!r}")
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ShapeError(f"expected (H, W, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"degenerate spatial shape {arr.shape}")
        arr = arr.astype(np.float32, copy=False)
        if not np.all(np.isfinite(arr)):
            raise ShapeError("image contains non-finite values")
        lo, hi = RANGES[self.range_tag]
        amin, amax = float(arr.min()), float(arr.max())
        if amin < lo or amax > hi:
            raise RangeTagMismatch(
                f"values [{amin}, {amax}] outside declared {self.range_tag} "
                f"range [{lo}, {hi}]"
            )
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass
class LabelMap:
    """An (H, W) map of class indices in [0, K-1], with 255 = ignore."""

    data: np.ndarray
    num_classes: int = 19

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ShapeError(f"expected (H, W) array, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ShapeError(f"label values must be integers, got {arr.dtype}")
        if self.num_classes < 1 or self.num_classes > IGNORE:
            raise InvalidClassValue(f"num_classes {self.num_classes} out of range")
        bad = (arr >= self.num_classes) & (arr != IGNORE)
        bad |= arr < 0
        if bad.any():
            values = sorted(int(v) for v in np.unique(arr[bad]))
            raise InvalidClassValue(
                f"label values {values} invalid for K={self.num_classes}"
            )
        self.data = arr.astype(np.uint8, copy=False)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def load_image(path) -> ImageTensor:
    """Load an 8-bit RGB raster as a unit-range ImageTensor (v = raw/255)."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    try:
        with Image.open(path) as img:
            if img.mode != "RGB":
                raise DecodeError(f"{path}: expected RGB input, got mode {img.mode}")
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return ImageTensor(arr.astype(np.float32) / 255.0, "unit")


def save_image(img: ImageTensor, path) -> None:
    """Write a unit-range image as 8-bit RGB PNG (values quantized by rounding)."""
    if img.range_tag != "unit":
        raise RangeTagMismatch("save_image expects a unit-range image")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    quantized = np.rint(img.data * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path)


def load_labelmap(path, num_classes: int = 19) -> LabelMap:
    """Load a single-channel 8-bit raster of class indices.

    Values are passed through unchanged; anything in [K, 254] is rejected.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise DecodeError(
                    f"{path}: expected single-channel input, got mode {img.mode}"
                )
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    try:
        return LabelMap(arr, num_classes=num_classes)
    except InvalidClassValue as exc:
        raise InvalidClassValue(f"{path}: {exc}") from exc


def save_labelmap(lm: LabelMap, path) -> None:
    """Write a label map as single-channel 8-bit PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(lm.data, mode="L").save(path)


def _axis_coords(out_size: int, in_size: int):
    # Half-pixel-center sampling: output index i reads source coordinate
    # (i + 0.5) * in/out - 0.5, clamped at the borders.
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    lo = np.floor(src).astype(np.int64)
    frac = (src - lo).astype(np.float32)
    i0 = np.clip(lo, 0, in_size - 1)
    i1 = np.clip(lo + 1, 0, in_size - 1)
    return i0, i1, frac


def _check_size(out_w: int, out_h: int) -> None:
    if int(out_w) != out_w or int(out_h) != out_h or out_w < 1 or out_h < 1:
        raise InvalidSize(f"invalid target size {out_w}x{out_h}")


def resize_image(img: ImageTensor, out_w: int, out_h: int) -> ImageTensor:
    """Bilinear resize preserving the range tag; output values are clamped."""
    _check_size(out_w, out_h)
    data = img.data
    h, w = data.shape[:2]
    if (w, h) == (out_w, out_h):
        return ImageTensor(data.copy(), img.range_tag)
    y0, y1, fy = _axis_coords(out_h, h)
    x0, x1, fx = _axis_coords(out_w, w)
    rows = data[y0] * (1.0 - fy)[:, None, None] + data[y1] * fy[:, None, None]
    out = rows[:, x0] * (1.0 - fx)[None, :, None] + rows[:, x1] * fx[None, :, None]
    lo, hi = RANGES[img.range_tag]
    return ImageTensor(np.clip(out, lo, hi), img.range_tag)


def resize_labels(lm: LabelMap, out_w: int, out_h: int) -> LabelMap:
    """Nearest-neighbor resize; never introduces values absent from the input."""
    _check_size(out_w, out_h)
    h, w = lm.data.shape
    if (w, h) == (out_w, out_h):
        return LabelMap(lm.data.copy(), lm.num_classes)
    ys = np.clip(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), 0, h - 1)
    xs = np.clip(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), 0, w - 1)
    return LabelMap(lm.data[np.ix_(ys, xs)], lm.num_classes)


def to_signed(img: ImageTensor) -> ImageTensor:
    """Map a unit-range image affinely onto [-1, 1] (v -> 2v - 1)."""
    if img.range_tag != "unit":
        raise RangeTagMismatch("to_signed expects a unit-range image")
    return ImageTensor(img.data * 2.0 - 1.0, "signed")


def to_unit(img: ImageTensor) -> ImageTensor:
    """Map a signed-range image affinely onto [0, 1] (v -> (v + 1) / 2)."""
    if img.range_tag != "signed":
        raise RangeTagMismatch("to_unit expects a signed-range image")
    return ImageTensor((img.data + 1.0) * 0.5, "unit")


# Fixed color table for rendering label maps; road-scene-ish hues for the
# first 19 classes, golden-angle hues beyond that, black for ignore.
_BASE_COLORS = [
    (128, 64, 128), (244, 35, 232), (70, 70, 70), (102, 102, 156),
    (190, 153, 153), (153, 153, 153), (250, 170, 30), (220, 220, 0),
    (107, 142, 35), (152, 251, 152), (70, 130, 180), (220, 20, 60),
    (255, 0, 0), (0, 0, 142), (0, 0, 70), (0, 60, 100),
    (0, 80, 100), (0, 0, 230), (119, 11, 32),
]


def class_color_table(num_classes: int) -> np.ndarray:
    """Return a (256, 3) uint8 palette indexed by class value (255 -> black)."""
    table = np.zeros((256, 3), dtype=np.uint8)
    for c in range(num_classes):
        if c < len(_BASE_COLORS):
            table[c] = _BASE_COLORS[c]
        else:
            hue = (c * 137.508) % 360.0
            table[c] = _hsv_to_rgb(hue, 0.75, 0.9)
    return table


def _hsv_to_rgb(h: float, s: float, v: float):
    i = int(h / 60.0) % 6
    f = h / 60.0 - int(h / 60.0)
    p, q, t = v * (1 - s), v * (1 - f * s), v * (1 - (1 - f) * s)
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return tuple(int(round(255 * c)) for c in rgb)


def labels_to_color(lm: LabelMap) -> np.ndarray:
    """Render a label map as an (H, W, 3) uint8 color image."""
    return class_color_table(lm.num_classes)[lm.data]
