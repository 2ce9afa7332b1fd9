"""Per-frame association pipeline and track lifecycle.

Each frame runs three association passes over the active identities:

1. basic: Hungarian matching on box IoU between the previous and current
   frame, restricted to rows/columns with a single confident overlap;
2. interaction: rows/columns with two or more confident overlaps are
   re-scored by blending box IoU with entity-mask IoU before matching,
   which keeps identities apart while bodies cross or occlude;
3. refind: identities that lost their detection are parked in a buffer for
   up to ``k`` frames and may reclaim a nearby unmatched detection, with the
   gap filled by linear box interpolation.

Tracks whose last position sits within a margin of the arena edge terminate
instead of entering the buffer, and identities unseen for more than ``k``
frames are discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from .assignment import FORBIDDEN, iou_cost_matrix, solve
from .geometry import BBox, buffer_region, center, contains, interpolate_boxes, iou
from .masks import BinaryMask, entity_iou


class TrackStatus(Enum):
    ACTIVE = "active"
    LOST = "lost"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class Detection:
    """One detector output: a box with a confidence in a specific frame.

    ``mask_ref`` is an opaque key a :class:`MaskSource` can resolve to the
    detection's entity mask; ``None`` when no mask is available.
    """

    frame: int
    box: BBox
    confidence: float = 1.0
    mask_ref: object = None

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"frame must be >= 0, got {self.frame}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


class MaskSource(Protocol):
    def get(self, ref, anchor: BBox) -> Optional[BinaryMask]:
        """Resolve a detection's mask reference, anchored at its box; None if unavailable."""


@dataclass
class TrajectoryEntry:
    box: BBox
    confidence: float = 1.0
    interpolated: bool = False


#: Trajectory set: id -> frame -> entry, both in ascending order.
Trajectories = dict[int, dict[int, TrajectoryEntry]]


@dataclass
class TrackerConfig:
    tau_match: float = 0.3        # minimum IoU (or blended score) to accept a match
    tau_ambiguous: float = 0.1    # overlap level above which contention is flagged
    alpha: float = 0.5            # weight of box IoU vs entity IoU in blended scores
    k: int = 10                   # refind window (frames) and buffer radius multiplier
    population_mode: str = "open"  # "open" spawns new ids, "fixed" never does
    spawn_delay: int = 1          # consecutive unmatched frames before an id spawns
    arena: Optional[BBox] = None  # known tracking area; enables edge termination
    boundary_margin: float = 1.0  # arena-edge margin in box widths/heights
    enable_interaction: bool = True
    enable_refind: bool = True

    def __post_init__(self):
        if not 0.0 < self.tau_match <= 1.0:
            raise ValueError(f"tau_match must be in (0, 1], got {self.tau_match}")
        if not 0.0 < self.tau_ambiguous <= 1.0:
            raise ValueError(f"tau_ambiguous must be in (0, 1], got {self.tau_ambiguous}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.population_mode not in ("open", "fixed"):
            raise ValueError(f"population_mode must be 'open' or 'fixed', got {self.population_mode!r}")
        if not isinstance(self.spawn_delay, int) or self.spawn_delay < 0:
            raise ValueError(f"spawn_delay must be a non-negative integer, got {self.spawn_delay!r}")
        if self.boundary_margin < 0:
            raise ValueError(f"boundary_margin must be >= 0, got {self.boundary_margin}")


@dataclass
class Track:
    id: int
    status: TrackStatus
    history: dict[int, TrajectoryEntry]
    last_seen: int
    lost_since: Optional[int] = None
    entity_ref: object = None
    _entity_cache: Optional[BinaryMask] = field(default=None, repr=False)

    @property
    def last_box(self) -> BBox:
        return self.history[self.last_seen].box

    def observe(self, frame: int, det: Detection) -> None:
        self.history[frame] = TrajectoryEntry(det.box, det.confidence, False)
        self.last_seen = frame
        self.status = TrackStatus.ACTIVE
        self.lost_since = None
        self.entity_ref = det.mask_ref
        self._entity_cache = None

    def entity(self, source: Optional[MaskSource]) -> Optional[BinaryMask]:
        """Entity mask of the detection matched at ``last_seen``, resolved lazily."""
        if self._entity_cache is not None:
            return self._entity_cache
        if source is None or self.entity_ref is None:
            return None
        mask = source.get(self.entity_ref, self.last_box)
        self._entity_cache = mask
        return mask


@dataclass
class PendingSpawn:
    """Unmatched detection streak being watched before it becomes a track (open mode)."""

    box: BBox
    frames_seen: int
    last_frame: int


@dataclass(frozen=True)
class InteractionRecord:
    """Audit entry for one scored pair in the interaction pass."""

    frame: int
    track_id: int
    det_ref: object
    track_entity_ref: object
    box_iou: float
    entity_iou: Optional[float]  # None when the pair fell back to box IoU


@dataclass
class TrackerState:
    """Single-owner mutable state; advance it only through :func:`step`."""

    config: TrackerConfig
    tracks: list[Track] = field(default_factory=list)
    next_id: int = 1
    frame: Optional[int] = None
    pending: list[PendingSpawn] = field(default_factory=list)
    unclaimed: list[tuple[int, int]] = field(default_factory=list)  # fixed mode: (frame, det index)
    warnings: list[str] = field(default_factory=list)
    interaction_log: list[InteractionRecord] = field(default_factory=list)

    def active_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.status is TrackStatus.ACTIVE]

    def lost_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.status is TrackStatus.LOST]


def init_tracks(detections: Sequence[Detection], config: TrackerConfig) -> TrackerState:
    """Start one active track per first-frame detection, ids 1..n in input order."""
    state = TrackerState(config=config)
    if not detections:
        return state
    frames = {d.frame for d in detections}
    if len(frames) != 1:
        raise ValueError(f"initial detections span multiple frames: {sorted(frames)}")
    f = detections[0].frame
    state.frame = f
    for det in detections:
        state.tracks.append(
            Track(
                id=state.next_id,
                status=TrackStatus.ACTIVE,
                history={f: TrajectoryEntry(det.box, det.confidence, False)},
                last_seen=f,
                entity_ref=det.mask_ref,
            )
        )
        state.next_id += 1
    return state


def compute_overlaps(state: TrackerState, detections: Sequence[Detection]) -> np.ndarray:
    """IoU matrix of active tracks' last boxes vs current detection boxes."""
    acts = state.active_tracks()
    m = np.zeros((len(acts), len(detections)))
    for r, t in enumerate(acts):
        for c, d in enumerate(detections):
            m[r, c] = iou(t.last_box, d.box)
    return m


def detect_ambiguities(ious: np.ndarray, tau_ambiguous: float) -> set[tuple[int, int]]:
    """Entries caught in multi-way overlap contention.

    A row or column with two or more entries strictly above ``tau_ambiguous``
    is contended; every above-threshold entry in a contended row or column is
    flagged.
    """
    above = ious > tau_ambiguous
    flagged: set[tuple[int, int]] = set()
    for r in np.flatnonzero(above.sum(axis=1) >= 2):
        for c in np.flatnonzero(above[r]):
            flagged.add((int(r), int(c)))
    for c in np.flatnonzero(above.sum(axis=0) >= 2):
        for r in np.flatnonzero(above[:, c]):
            flagged.add((int(r), int(c)))
    return flagged


def basic_associate(
    state: TrackerState,
    detections: Sequence[Detection],
    ious: np.ndarray,
    flagged: set[tuple[int, int]] = frozenset(),
) -> dict[int, int]:
    """Match and update tracks outside the contended rows/columns.

    Returns the applied row -> column mapping over the full matrix indices.
    """
    acts = state.active_tracks()
    cfg = state.config
    skip_rows = {r for r, _ in flagged}
    skip_cols = {c for _, c in flagged}
    rows = [r for r in range(len(acts)) if r not in skip_rows]
    cols = [c for c in range(len(detections)) if c not in skip_cols]
    costs = np.full((len(rows), len(cols)), FORBIDDEN)
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            v = ious[r, c]
            if v >= cfg.tau_match:
                costs[i, j] = 1.0 - v
    matched: dict[int, int] = {}
    for i, j in solve(costs).pairs:
        r, c = rows[i], cols[j]
        det = detections[c]
        acts[r].observe(det.frame, det)
        matched[r] = c
    return matched


def interaction_associate(
    state: TrackerState,
    flagged: set[tuple[int, int]],
    detections: Sequence[Detection],
    mask_source: Optional[MaskSource],
) -> dict[int, int]:
    """Resolve contended rows/columns with blended box/entity IoU scores.

    Pairs missing a resolvable mask on either side fall back to box IoU alone
    and leave a warning record.  Returns the applied row -> column mapping.
    """
    if not flagged:
        return {}
    acts = state.active_tracks()
    cfg = state.config
    frame = detections[0].frame if detections else state.frame
    rows = sorted({r for r, _ in flagged})
    cols = sorted({c for _, c in flagged})
    det_masks: dict[int, Optional[BinaryMask]] = {}
    for c in cols:
        det = detections[c]
        if mask_source is not None and det.mask_ref is not None:
            det_masks[c] = mask_source.get(det.mask_ref, det.box)
        else:
            det_masks[c] = None

    costs = np.full((len(rows), len(cols)), FORBIDDEN)
    warned: set[object] = set()
    for i, r in enumerate(rows):
        track = acts[r]
        track_mask = track.entity(mask_source)
        for j, c in enumerate(cols):
            if (r, c) not in flagged:
                continue
            det = detections[c]
            box_score = iou(track.last_box, det.box)
            det_mask = det_masks[c]
            if track_mask is not None and det_mask is not None:
                e = entity_iou(track_mask, det_mask)
                s = cfg.alpha * box_score + (1.0 - cfg.alpha) * e
            else:
                e = None
                s = box_score
                key = (frame, track.id, c)
                if key not in warned:
                    warned.add(key)
                    state.warnings.append(
                        f"frame {frame}: no entity mask for track {track.id} / detection {c}; "
                        "falling back to box IoU"
                    )
            state.interaction_log.append(
                InteractionRecord(frame, track.id, det.mask_ref, track.entity_ref, box_score, e)
            )
            if s >= cfg.tau_match:
                costs[i, j] = 1.0 - s
    matched: dict[int, int] = {}
    for i, j in solve(costs).pairs:
        r, c = rows[i], cols[j]
        det = detections[c]
        acts[r].observe(det.frame, det)
        matched[r] = c
    return matched


def _near_arena_edge(box: BBox, cfg: TrackerConfig) -> bool:
    cx, cy = center(box)
    a = cfg.arena
    mx = cfg.boundary_margin * box.w
    my = cfg.boundary_margin * box.h
    return cx < a.x + mx or cx > a.x + a.w - mx or cy < a.y + my or cy > a.y + a.h - my


def refind_update(
    state: TrackerState,
    frame: int,
    detections: Sequence[Detection],
    unmatched_cols: Iterable[int],
) -> dict[int, int]:
    """Lifecycle pass: demote misses, expire the buffer, reclaim, spawn.

    Active tracks without a detection this frame become lost (or terminate at
    the arena edge); lost tracks past the ``k``-frame window are discarded;
    surviving lost tracks may claim an unmatched detection whose center falls
    inside their buffer region, with the gap linearly interpolated.  Leftover
    detections feed the open-mode spawner or the fixed-mode unclaimed log.
    Returns lost-track id -> claimed column.
    """
    cfg = state.config
    for t in state.tracks:
        if t.status is TrackStatus.ACTIVE and t.last_seen < frame:
            if cfg.arena is not None and _near_arena_edge(t.last_box, cfg):
                t.status = TrackStatus.TERMINATED
            else:
                t.status = TrackStatus.LOST
                t.lost_since = frame
    for t in state.tracks:
        if t.status is TrackStatus.LOST and frame - t.lost_since > cfg.k:
            t.status = TrackStatus.TERMINATED

    free_cols = sorted(unmatched_cols)
    claimed: dict[int, int] = {}
    if cfg.enable_refind:
        assigned_ids = {t.id for t in state.tracks if t.status is TrackStatus.ACTIVE and t.last_seen == frame}
        lost = [t for t in state.lost_tracks() if t.id not in assigned_ids]
        if lost and free_cols:
            costs = np.full((len(lost), len(free_cols)), FORBIDDEN)
            for i, t in enumerate(lost):
                region = buffer_region(t.last_box, cfg.k)
                tc = center(t.last_box)
                for j, c in enumerate(free_cols):
                    dc = center(detections[c].box)
                    if contains(region, dc):
                        costs[i, j] = math.hypot(tc[0] - dc[0], tc[1] - dc[1])
            for i, j in solve(costs).pairs:
                t = lost[i]
                c = free_cols[j]
                det = detections[c]
                gap = frame - t.last_seen - 1
                if gap > 0:
                    start = t.last_box
                    for off, b in enumerate(interpolate_boxes(start, det.box, gap), start=1):
                        t.history[t.last_seen + off] = TrajectoryEntry(b, 0.0, True)
                t.observe(frame, det)
                claimed[t.id] = c
            free_cols = [c for c in free_cols if c not in set(claimed.values())]

    _spawn_or_record(state, frame, detections, free_cols)
    return claimed


def _spawn_or_record(
    state: TrackerState, frame: int, detections: Sequence[Detection], free_cols: list[int]
) -> None:
    cfg = state.config
    if cfg.population_mode == "fixed":
        state.unclaimed.extend((frame, c) for c in free_cols)
        state.pending = []
        return
    carry = [p for p in state.pending if p.last_frame == frame - 1]
    costs = np.full((len(carry), len(free_cols)), FORBIDDEN)
    for i, p in enumerate(carry):
        for j, c in enumerate(free_cols):
            v = iou(p.box, detections[c].box)
            if v >= cfg.tau_match:
                costs[i, j] = 1.0 - v
    linked = {j: i for i, j in solve(costs).pairs}
    next_pending: list[PendingSpawn] = []
    for j, c in enumerate(free_cols):
        det = detections[c]
        seen = carry[linked[j]].frames_seen + 1 if j in linked else 1
        if seen >= cfg.spawn_delay:
            track = Track(
                id=state.next_id,
                status=TrackStatus.ACTIVE,
                history={frame: TrajectoryEntry(det.box, det.confidence, False)},
                last_seen=frame,
                entity_ref=det.mask_ref,
            )
            state.tracks.append(track)
            state.next_id += 1
        else:
            next_pending.append(PendingSpawn(det.box, seen, frame))
    state.pending = next_pending


def step(
    state: TrackerState,
    frame: int,
    detections: Sequence[Detection],
    mask_source: Optional[MaskSource] = None,
) -> list[tuple[int, BBox, float]]:
    """Advance the tracker by one frame; frames must arrive strictly increasing.

    Returns (id, box, confidence) for every identity observed this frame,
    sorted by id.  Identities sitting in the refind buffer emit nothing until
    re-found; their gap boxes appear in the final trajectories instead.
    """
    if state.frame is not None and frame <= state.frame:
        raise ValueError(f"frames must be strictly increasing: got {frame} after {state.frame}")
    for d in detections:
        if d.frame != frame:
            raise ValueError(f"detection frame {d.frame} does not match step frame {frame}")

    ious = compute_overlaps(state, detections)
    flagged = (
        detect_ambiguities(ious, state.config.tau_ambiguous)
        if state.config.enable_interaction
        else set()
    )
    state.frame = frame
    matched = basic_associate(state, detections, ious, flagged)
    if flagged:
        matched.update(interaction_associate(state, flagged, detections, mask_source))
    unmatched_cols = [c for c in range(len(detections)) if c not in set(matched.values())]
    refind_update(state, frame, detections, unmatched_cols)

    out = [
        (t.id, t.history[frame].box, t.history[frame].confidence)
        for t in state.tracks
        if t.status is TrackStatus.ACTIVE and t.last_seen == frame
    ]
    out.sort(key=lambda item: item[0])
    return out


def finalize(state: TrackerState) -> Trajectories:
    """Frame-sorted box history per identity, interpolated entries included."""
    return {t.id: dict(sorted(t.history.items())) for t in state.tracks if t.history}


def run_tracker(
    frames: Sequence[tuple[int, Sequence[Detection]]],
    config: TrackerConfig,
    mask_source: Optional[MaskSource] = None,
) -> tuple[Trajectories, TrackerState]:
    """Drive init/step/finalize over an ascending (frame, detections) sequence."""
    if not frames:
        return {}, TrackerState(config=config)
    first_frame, first_dets = frames[0]
    for d in first_dets:
        if d.frame != first_frame:
            raise ValueError(f"detection frame {d.frame} does not match frame {first_frame}")
    state = init_tracks(list(first_dets), config)
    if state.frame is None:
        state.frame = first_frame
    for f, dets in frames[1:]:
        step(state, f, list(dets), mask_source)
    return finalize(state), state
