"""Foreground-entity extraction from grayscale crops.

A detection box crop is binarized (Otsu by default, darker pixels as
foreground), reduced to its largest connected blob, and the resulting bitmap
is compared against other entities by pixel-level IoU in global image
coordinates.  PGM (binary "P5") crops and PBM (binary "P4") masks are the
on-disk forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import BBox

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def raster_dims(box: BBox) -> tuple[int, int]:
    """(height, width) of the integer pixel raster covering a box, at least 1x1."""
    return (max(1, round(box.h)), max(1, round(box.w)))


@dataclass(frozen=True)
class GrayCrop:
    """Grayscale image patch cut out at a detection box.

    ``pixels`` is a row-major (height, width) uint8 array whose shape must match
    the anchor box dimensions rounded to integers.
    """

    pixels: np.ndarray
    anchor: BBox

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        object.__setattr__(self, "pixels", px)
        if px.ndim != 2 or px.size == 0:
            raise ValueError(f"crop pixels must be a non-empty 2-d array, got shape {px.shape}")
        expected = raster_dims(self.anchor)
        if px.shape != expected:
            raise ValueError(
                f"crop shape {px.shape} does not match anchor raster {expected}"
            )

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """Foreground bitmap anchored at a box in global image coordinates.

    Pixel (row, col) of the bitmap occupies the global integer cell
    (floor(anchor.y) + row, floor(anchor.x) + col); sub-pixel anchors are
    floored, never resampled.
    """

    bits: np.ndarray
    anchor: BBox

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        object.__setattr__(self, "bits", b)
        if b.ndim != 2 or b.size == 0:
            raise ValueError(f"mask bits must be a non-empty 2-d array, got shape {b.shape}")

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def n_foreground(self) -> int:
        return int(self.bits.sum())


def otsu_level(crop: GrayCrop) -> int:
    """Threshold maximizing between-class variance of the crop's 256-bin histogram.

    Ties break toward the lowest level; a constant-intensity crop returns that
    intensity.  The argmax is computed with exact integer arithmetic so that
    near-tied levels never flip on floating-point noise.
    """
    flat = crop.pixels.ravel()
    lo = int(flat.min())
    hi = int(flat.max())
    if lo == hi:
        return lo
    hist = np.bincount(flat, minlength=256)
    total = int(flat.size)
    total_sum = int(np.dot(hist, np.arange(256, dtype=np.int64)))

    # variance at level L (class A = pixels <= L) is (sA*wB - sB*wA)^2 / (wA*wB);
    # compare fractions by cross-multiplication to stay exact
    best_level = 0
    best_num = -1
    best_den = 1
    w_a = 0
    s_a = 0
    for level in range(256):
        w_a += int(hist[level])
        s_a += level * int(hist[level])
        w_b = total - w_a
        s_b = total_sum - s_a
        if w_a == 0 or w_b == 0:
            num, den = 0, 1
        else:
            diff = s_a * w_b - s_b * w_a
            num, den = diff * diff, w_a * w_b
        if num * best_den > best_num * den:
            best_num, best_den, best_level = num, den, level
    return best_level


def binarize(crop: GrayCrop, level: int, foreground_is_dark: bool = True) -> BinaryMask:
    """Threshold a crop into a foreground bitmap with the same anchor.

    Dark foreground keeps pixels <= level; light foreground keeps pixels > level.
    """
    if foreground_is_dark:
        bits = crop.pixels <= level
    else:
        bits = crop.pixels > level
    return BinaryMask(bits=bits, anchor=crop.anchor)


def largest_connected_component(mask: BinaryMask) -> BinaryMask:
    """Keep only the 8-connected foreground component with the most pixels.

    Ties break toward the component whose topmost-leftmost pixel comes first in
    row-major order; an all-background mask passes through unchanged.
    """
    labels, n = ndimage.label(mask.bits, structure=_EIGHT_CONNECTED)
    if n == 0:
        return BinaryMask(bits=np.zeros_like(mask.bits), anchor=mask.anchor)
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    top = counts.max()
    tied = np.flatnonzero(counts == top)
    if len(tied) == 1:
        keep = int(tied[0])
    else:
        flat = labels.ravel()
        keep = int(min(tied, key=lambda lab: int(np.flatnonzero(flat == lab)[0])))
    return BinaryMask(bits=labels == keep, anchor=mask.anchor)


def entity_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Pixel IoU of two masks rasterized into global integer coordinates.

    Returns 0 when the combined foreground is empty.
    """
    ax, ay = math.floor(a.anchor.x), math.floor(a.anchor.y)
    bx, by = math.floor(b.anchor.x), math.floor(b.anchor.y)
    n_a = a.n_foreground
    n_b = b.n_foreground
    x0 = max(ax, bx)
    y0 = max(ay, by)
    x1 = min(ax + a.width, bx + b.width)
    y1 = min(ay + a.height, by + b.height)
    inter = 0
    if x1 > x0 and y1 > y0:
        win_a = a.bits[y0 - ay : y1 - ay, x0 - ax : x1 - ax]
        win_b = b.bits[y0 - by : y1 - by, x0 - bx : x1 - bx]
        inter = int(np.logical_and(win_a, win_b).sum())
    union = n_a + n_b - inter
    if union == 0:
        return 0.0
    return inter / union


def extract_entity(
    crop: GrayCrop,
    foreground_is_dark: bool = True,
    level: int | None = None,
) -> BinaryMask:
    """Binarize a crop and keep the largest foreground blob.

    ``level=None`` picks the threshold with :func:`otsu_level`; pass an explicit
    level to override.
    """
    if level is None:
        level = otsu_level(crop)
    return largest_connected_component(binarize(crop, level, foreground_is_dark))


# ---------------------------------------------------------------------------
# PGM / PBM codecs


def _read_pnm_header(data: bytes, magic: bytes, n_fields: int, path) -> tuple[list[int], int]:
    if not data.startswith(magic):
        raise ValueError(f"{path}: expected {magic.decode()} header")
    i = len(magic)
    fields: list[int] = []
    while len(fields) < n_fields:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ValueError(f"{path}: truncated header")
        try:
            fields.append(int(data[i:j]))
        except ValueError:
            raise ValueError(f"{path}: non-numeric header field {data[i:j]!r}") from None
        i = j
    return fields, i + 1  # single whitespace byte separates header from raster


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM file into a (height, width) uint8 array."""
    data = Path(path).read_bytes()
    (w, h, maxval), offset = _read_pnm_header(data, b"P5", 3, path)
    if w < 1 or h < 1:
        raise ValueError(f"{path}: bad dimensions {w}x{h}")
    if not 0 < maxval < 256:
        raise ValueError(f"{path}: unsupported maxval {maxval} (8-bit only)")
    raster = data[offset : offset + w * h]
    if len(raster) < w * h:
        raise ValueError(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, pixels: np.ndarray) -> None:
    px = np.asarray(pixels, dtype=np.uint8)
    h, w = px.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(px.tobytes())


def read_pbm(path) -> np.ndarray:
    """Read a binary (P4) PBM file into a (height, width) bool array (1 = foreground)."""
    data = Path(path).read_bytes()
    (w, h), offset = _read_pnm_header(data, b"P4", 2, path)
    if w < 1 or h < 1:
        raise ValueError(f"{path}: bad dimensions {w}x{h}")
    row_bytes = (w + 7) // 8
    raster = data[offset : offset + row_bytes * h]
    if len(raster) < row_bytes * h:
        raise ValueError(f"{path}: truncated raster")
    rows = np.frombuffer(raster, dtype=np.uint8).reshape(h, row_bytes)
    return np.unpackbits(rows, axis=1)[:, :w].astype(bool)


def write_pbm(path, bits: np.ndarray) -> None:
    b = np.asarray(bits, dtype=bool)
    h, w = b.shape
    packed = np.packbits(b.astype(np.uint8), axis=1)
    with open(path, "wb") as f:
        f.write(f"P4\n{w} {h}\n".encode())
        f.write(packed.tobytes())
