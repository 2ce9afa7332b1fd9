"""Tracking evaluation: CLEAR-MOT accounting and identity-level scores.

Inputs are trajectory sets, ``{id: {frame: box}}``, where each box is a
:class:`~swimtrack.geometry.BBox` or a tracker ``TrajectoryEntry``.
Interpolated hypothesis boxes are scored like any other box.

Metric directions: MOTA, IDF1, IDP and IDR are all higher-is-better.
MOTA can go negative on bad tracking; that is a legal value, not an error.
Undefined ratios (empty denominators) are reported as ``None`` and rendered
as NOT-APPLICABLE.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .assignment import FORBIDDEN, solve
from .geometry import BBox, as_box, iou

TrajectorySet = Mapping[int, Mapping[int, object]]


def _frames_index(trajs: TrajectorySet) -> dict[int, dict[int, BBox]]:
    """Re-index a trajectory set as frame -> id -> box, ids sorted."""
    out: dict[int, dict[int, BBox]] = {}
    for tid in sorted(trajs):
        for frame in sorted(trajs[tid]):
            out.setdefault(frame, {})[tid] = as_box(trajs[tid][frame])
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class ClearResult:
    mota: Optional[float]  # None when no ground truth exists
    fn: int
    fp: int
    idsw: int
    num_gt: int
    frames: int


@dataclass(frozen=True)
class IdResult:
    idf1: Optional[float]
    idp: Optional[float]
    idr: Optional[float]
    idtp: int
    idfp: int
    idfn: int


def _gate_match(
    gt_boxes: dict[int, BBox], hyp_boxes: dict[int, BBox], iou_gate: float
) -> list[tuple[int, int]]:
    """Max-cardinality, then max total IoU matching between two box pools."""
    rows = sorted(gt_boxes)
    cols = sorted(hyp_boxes)
    if not rows or not cols:
        return []
    costs = np.full((len(rows), len(cols)), FORBIDDEN)
    for i, g in enumerate(rows):
        for j, h in enumerate(cols):
            v = iou(gt_boxes[g], hyp_boxes[h])
            if v >= iou_gate:
                costs[i, j] = 1.0 - v
    return [(rows[i], cols[j]) for i, j in solve(costs).pairs]


def clear_mot(gt: TrajectorySet, hyp: TrajectorySet, iou_gate: float = 0.5) -> ClearResult:
    """Frame-by-frame CLEAR accounting.

    Per frame: correspondences from the previous frame survive if both boxes
    are present and still overlap at ``iou_gate``; the leftovers are matched
    by the assignment solver; unmatched ground truth counts as a false
    negative, unmatched hypotheses as false positives, and a ground-truth id
    matched to a different hypothesis than its most recent one counts as an
    identity switch.
    """
    gt_by_frame = _frames_index(gt)
    hyp_by_frame = _frames_index(hyp)
    frames = sorted(set(gt_by_frame) | set(hyp_by_frame))
    fn = fp = idsw = num_gt = 0
    corr: dict[int, int] = {}        # matching of the previous frame
    last_match: dict[int, int] = {}  # most recent hypothesis for each gt id, ever
    for frame in frames:
        gt_boxes = dict(gt_by_frame.get(frame, {}))
        hyp_boxes = dict(hyp_by_frame.get(frame, {}))
        num_gt += len(gt_boxes)
        matches: list[tuple[int, int]] = []
        for g in sorted(corr):
            h = corr[g]
            if g in gt_boxes and h in hyp_boxes and iou(gt_boxes[g], hyp_boxes[h]) >= iou_gate:
                matches.append((g, h))
                del gt_boxes[g]
                del hyp_boxes[h]
        matches.extend(_gate_match(gt_boxes, hyp_boxes, iou_gate))
        fn += len(gt_by_frame.get(frame, {})) - len(matches)
        fp += len(hyp_by_frame.get(frame, {})) - len(matches)
        for g, h in matches:
            if g in last_match and last_match[g] != h:
                idsw += 1
            last_match[g] = h
        corr = dict(matches)
    mota = 1.0 - (fn + fp + idsw) / num_gt if num_gt > 0 else None
    return ClearResult(mota, fn, fp, idsw, num_gt, len(frames))


def id_metrics(gt: TrajectorySet, hyp: TrajectorySet, iou_gate: float = 0.5) -> IdResult:
    """Identity precision/recall/F1 under a global trajectory matching.

    Each (gt trajectory, hyp trajectory) pair is weighted by the number of
    frames where their boxes overlap at ``iou_gate``; a one-to-one matching
    maximizing total weight fixes IDTP, and the remaining box counts give
    IDFP and IDFN.
    """
    gt_ids = sorted(gt)
    hyp_ids = sorted(hyp)
    n_gt = sum(len(gt[g]) for g in gt_ids)
    n_hyp = sum(len(hyp[h]) for h in hyp_ids)
    weights = np.zeros((len(gt_ids), len(hyp_ids)))
    for i, g in enumerate(gt_ids):
        g_frames = gt[g]
        for j, h in enumerate(hyp_ids):
            h_frames = hyp[h]
            w = 0
            for frame in sorted(set(g_frames) & set(h_frames)):
                if iou(as_box(g_frames[frame]), as_box(h_frames[frame])) >= iou_gate:
                    w += 1
            weights[i, j] = w
    idtp = 0
    if gt_ids and hyp_ids:
        # Complete finite matrix: zero-weight pairs stay allowed, so the
        # solver's max-cardinality rule cannot distort the max-weight answer.
        wmax = float(weights.max())
        matching = solve(wmax - weights)
        idtp = int(round(sum(weights[i, j] for i, j in matching.pairs)))
    idfp = n_hyp - idtp
    idfn = n_gt - idtp
    idp = idtp / (idtp + idfp) if idtp + idfp > 0 else None
    idr = idtp / (idtp + idfn) if idtp + idfn > 0 else None
    denom = 2 * idtp + idfp + idfn
    idf1 = 2 * idtp / denom if denom > 0 else None
    return IdResult(idf1, idp, idr, idtp, idfp, idfn)


@dataclass(frozen=True)
class MetricsReport:
    clear: ClearResult
    ident: IdResult
    iou_gate: float
    sequence: Optional[str] = None

    def to_dict(self) -> dict:
        def cell(v):
            return "NOT-APPLICABLE" if v is None else v

        return {
            "sequence": self.sequence,
            "iou_gate": self.iou_gate,
            "metric_direction": "higher is better for MOTA, IDF1, IDP, IDR",
            "MOTA": cell(self.clear.mota),
            "IDF1": cell(self.ident.idf1),
            "IDP": cell(self.ident.idp),
            "IDR": cell(self.ident.idr),
            "counts": {
                "FN": self.clear.fn,
                "FP": self.clear.fp,
                "IDSW": self.clear.idsw,
                "GT": self.clear.num_gt,
                "frames": self.clear.frames,
                "IDTP": self.ident.idtp,
                "IDFP": self.ident.idfp,
                "IDFN": self.ident.idfn,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        def cell(v):
            return "NOT-APPLICABLE" if v is None else f"{v:.6f}"

        lines = []
        if self.sequence:
            lines.append(f"sequence: {self.sequence}")
        lines += [
            f"iou_gate: {self.iou_gate:g}",
            "metrics (higher is better):",
            f"  MOTA: {cell(self.clear.mota)}",
            f"  IDF1: {cell(self.ident.idf1)}",
            f"  IDP:  {cell(self.ident.idp)}",
            f"  IDR:  {cell(self.ident.idr)}",
            "counts:",
            f"  FN: {self.clear.fn}  FP: {self.clear.fp}  IDSW: {self.clear.idsw}  GT: {self.clear.num_gt}",
            f"  IDTP: {self.ident.idtp}  IDFP: {self.ident.idfp}  IDFN: {self.ident.idfn}",
        ]
        return "\n".join(lines) + "\n"


def evaluate_tracking(
    gt: TrajectorySet,
    hyp: TrajectorySet,
    iou_gate: float = 0.5,
    sequence: Optional[str] = None,
) -> MetricsReport:
    """Run both metric families over one sequence."""
    if not 0.0 <= iou_gate <= 1.0:
        raise ValueError(f"iou_gate must be in [0, 1], got {iou_gate}")
    return MetricsReport(
        clear=clear_mot(gt, hyp, iou_gate),
        ident=id_metrics(gt, hyp, iou_gate),
        iou_gate=iou_gate,
        sequence=sequence,
    )
