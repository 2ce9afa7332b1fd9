"""Input normalization for the estimator front end.

Detections may arrive as a numeric array, one row per detection with columns
(frame, x, y, w, h) or (frame, x, y, w, h, conf), or as an iterable of
:class:`~swimtrack.tracker.Detection`.  Ground truth adds an id column:
(frame, id, x, y, w, h).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .geometry import BBox
from .tracker import Detection


def _as_float_array(X, name: str, n_cols: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, n_cols[0])
    if arr.ndim != 2 or arr.shape[1] not in n_cols:
        raise ValueError(
            f"{name} must be a 2-d array with {' or '.join(map(str, n_cols))} columns, "
            f"got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _check_frame_column(col: np.ndarray, name: str) -> np.ndarray:
    frames = col.astype(int)
    if not np.array_equal(frames, col):
        raise ValueError(f"{name} frame column must hold whole numbers")
    if (frames < 0).any():
        raise ValueError(f"{name} frame numbers must be >= 0")
    return frames


def check_detections(X) -> list[tuple[int, list[Detection]]]:
    """Normalize detections into a contiguous per-frame sequence for the tracker."""
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], Detection):
        dets: Sequence[Detection] = X
        per_frame: dict[int, list[Detection]] = {}
        for d in dets:
            per_frame.setdefault(d.frame, []).append(d)
    else:
        arr = _as_float_array(X, "X", (5, 6))
        frames = _check_frame_column(arr[:, 0], "X")
        per_frame = {}
        for i in range(arr.shape[0]):
            frame = int(frames[i])
            x, y, w, h = arr[i, 1:5]
            conf = float(arr[i, 5]) if arr.shape[1] == 6 else 1.0
            if w <= 0 or h <= 0:
                raise ValueError(f"X row {i}: box width/height must be positive, got {w}x{h}")
            if not 0.0 <= conf <= 1.0:
                raise ValueError(f"X row {i}: confidence must be in [0, 1], got {conf}")
            ref = (frame, len(per_frame.get(frame, [])))
            per_frame.setdefault(frame, []).append(
                Detection(frame, BBox(x, y, w, h), conf, mask_ref=ref)
            )
    if not per_frame:
        return []
    lo, hi = min(per_frame), max(per_frame)
    return [(f, per_frame.get(f, [])) for f in range(lo, hi + 1)]


def check_trajectories(y) -> dict[int, dict[int, BBox]]:
    """Normalize a (frame, id, x, y, w, h) array into a trajectory set."""
    if isinstance(y, dict):
        return y
    arr = _as_float_array(y, "y", (6,))
    frames = _check_frame_column(arr[:, 0], "y")
    ids = arr[:, 1].astype(int)
    if not np.array_equal(ids, arr[:, 1]):
        raise ValueError("y id column must hold whole numbers")
    out: dict[int, dict[int, BBox]] = {}
    for i in range(arr.shape[0]):
        x, y_, w, h = arr[i, 2:6]
        if w <= 0 or h <= 0:
            raise ValueError(f"y row {i}: box width/height must be positive, got {w}x{h}")
        track = out.setdefault(int(ids[i]), {})
        frame = int(frames[i])
        if frame in track:
            raise ValueError(f"y row {i}: duplicate entry for id {ids[i]} at frame {frame}")
        track[frame] = BBox(x, y_, w, h)
    return out
