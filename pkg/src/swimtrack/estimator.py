"""Estimator-style front end around the association pipeline.

`IouAssociationTracker` follows the scikit-learn parameter protocol:
constructor arguments are stored verbatim, `get_params` / `set_params` /
`clone` work as usual, and validation happens at fit/predict time.  Masks
are not part of this front end; use :func:`swimtrack.tracker.run_tracker`
directly when entity masks are available.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .geometry import BBox
from .metrics import evaluate_tracking
from .tracker import TrackerConfig, finalize, init_tracks, step
from .validation import check_detections, check_trajectories


class IouAssociationTracker(BaseEstimator):
    """Overlap-based multi-object tracker with an array in/array out API.

    Parameters mirror :class:`~swimtrack.tracker.TrackerConfig`.  `predict`
    takes detections shaped (n, 5) or (n, 6) with columns
    (frame, x, y, w, h[, conf]) and returns tracks shaped (m, 7) with columns
    (frame, id, x, y, w, h, conf), where conf 0 marks interpolated boxes.

    >>> det = np.array([[1, 0, 0, 10, 10], [2, 2, 0, 10, 10]])
    >>> IouAssociationTracker().fit_predict(det)[:, 1]
    array([1., 1.])
    """

    def __init__(
        self,
        tau_match: float = 0.3,
        tau_ambiguous: float = 0.1,
        alpha: float = 0.5,
        k: int = 10,
        population_mode: str = "open",
        spawn_delay: int = 1,
        arena: Optional[BBox] = None,
        boundary_margin: float = 1.0,
        enable_interaction: bool = True,
        enable_refind: bool = True,
    ):
        self.tau_match = tau_match
        self.tau_ambiguous = tau_ambiguous
        self.alpha = alpha
        self.k = k
        self.population_mode = population_mode
        self.spawn_delay = spawn_delay
        self.arena = arena
        self.boundary_margin = boundary_margin
        self.enable_interaction = enable_interaction
        self.enable_refind = enable_refind

    def _config(self) -> TrackerConfig:
        return TrackerConfig(
            tau_match=self.tau_match,
            tau_ambiguous=self.tau_ambiguous,
            alpha=self.alpha,
            k=self.k,
            population_mode=self.population_mode,
            spawn_delay=self.spawn_delay,
            arena=self.arena,
            boundary_margin=self.boundary_margin,
            enable_interaction=self.enable_interaction,
            enable_refind=self.enable_refind,
        )

    def fit(self, X, y=None):
        """Validate parameters and input shape; the tracker keeps no training state."""
        self._config()
        frames = check_detections(X)
        self.n_frames_ = len(frames)
        return self

    def predict(self, X) -> np.ndarray:
        config = self._config()
        frames = check_detections(X)
        if not frames:
            return np.empty((0, 7))
        state = init_tracks(list(frames[0][1]), config)
        if state.frame is None:
            state.frame = frames[0][0]
        for f, dets in frames[1:]:
            step(state, f, dets)
        rows = []
        for tid, entries in sorted(finalize(state).items()):
            for frame, entry in entries.items():
                conf = 0.0 if entry.interpolated else entry.confidence
                rows.append(
                    (frame, tid, entry.box.x, entry.box.y, entry.box.w, entry.box.h, conf)
                )
        rows.sort(key=lambda r: (r[0], r[1]))
        return np.array(rows, dtype=float).reshape(len(rows), 7)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).predict(X)

    def score(self, X, y) -> float:
        """MOTA of predict(X) against ground truth y (higher is better)."""
        pred = self.predict(X)
        hyp: dict[int, dict[int, BBox]] = {}
        for frame, tid, x, y_, w, h, _ in pred:
            hyp.setdefault(int(tid), {})[int(frame)] = BBox(x, y_, w, h)
        report = evaluate_tracking(check_trajectories(y), hyp)
        if report.clear.mota is None:
            raise ValueError("MOTA is undefined: ground truth is empty")
        return report.clear.mota
