"""Axis-aligned box arithmetic shared by every stage of the tracker."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle in pixel coordinates, anchored at its top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"BBox.{name} must be a finite number, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"BBox extent must be positive, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes.

    Disjoint boxes, and boxes touching only along an edge or corner, score 0.
    """
    iw = min(a.right, b.right) - max(a.x, b.x)
    if iw <= 0:
        return 0.0
    ih = min(a.bottom, b.bottom) - max(a.y, b.y)
    if ih <= 0:
        return 0.0
    inter = iw * ih
    # rounding can push union a hair below inter for near-identical boxes
    return min(1.0, inter / (a.area + b.area - inter))


def center(b: BBox) -> tuple[float, float]:
    return (b.x + b.w / 2.0, b.y + b.h / 2.0)


def as_box(value) -> BBox:
    """Normalize a trajectory value: a BBox passes through, anything else
    must expose a ``box`` attribute (e.g. a trajectory entry)."""
    if isinstance(value, BBox):
        return value
    return value.box


def contains(region: BBox, point: tuple[float, float]) -> bool:
    """Closed-interval membership: points exactly on the boundary count as inside."""
    px, py = point
    return region.x <= px <= region.right and region.y <= py <= region.bottom


def buffer_region(center_box: BBox, k: int) -> BBox:
    """Search region centered on a box, with half-extents ``k`` box widths/heights.

    The returned rectangle shares the box's center and spans 2k*w by 2k*h.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    cx, cy = center(center_box)
    return BBox(
        cx - k * center_box.w,
        cy - k * center_box.h,
        2 * k * center_box.w,
        2 * k * center_box.h,
    )


def interpolate_boxes(start: BBox, end: BBox, n_missing: int) -> list[BBox]:
    """Evenly spaced boxes strictly between ``start`` and ``end``.

    Box i (1-based) takes each of x, y, w, h at fraction i/(n_missing+1) of the
    way from start to end; the endpoints themselves are excluded.
    """
    if n_missing < 1:
        raise ValueError(f"n_missing must be >= 1, got {n_missing}")
    out = []
    for i in range(1, n_missing + 1):
        t = i / (n_missing + 1)
        out.append(
            BBox(
                start.x + (end.x - start.x) * t,
                start.y + (end.y - start.y) * t,
                start.w + (end.w - start.w) * t,
                start.h + (end.h - start.h) * t,
            )
        )
    return out
