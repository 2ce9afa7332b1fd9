"""File interchange: MOT-style CSV, mask manifests, JSON configuration.

Tracks, ground truth and raw detections all share one 10-field CSV row:

    frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z

Frames are 1-based; raw detections carry id -1; the trailing x,y,z fields
are written as -1 and ignored on read.  A conf of exactly 0 marks a box the
tracker filled in by interpolation rather than observed.  Reals are written
with 6 decimal places, so a write/read roundtrip preserves values to 1e-6.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .geometry import BBox
from .masks import BinaryMask, GrayCrop, extract_entity, read_pbm, read_pgm, write_pbm
from .metrics import TrajectorySet
from .simulator import Scenario, ScenarioConfig
from .tracker import Detection, TrackerConfig, TrajectoryEntry

logger = logging.getLogger("swimtrack")


class FormatError(ValueError):
    """Malformed input file; message starts with path:line when known."""


def _fail(path, lineno: int, message: str):
    raise FormatError(f"{path}:{lineno}: {message}")


def _parse_mot_line(path, lineno: int, line: str) -> tuple[int, int, BBox, float]:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) != 10:
        _fail(path, lineno, f"expected 10 comma-separated fields, got {len(fields)}")
    try:
        frame = int(fields[0])
        obj_id = int(fields[1])
    except ValueError:
        _fail(path, lineno, f"frame and id must be integers, got {fields[0]!r}, {fields[1]!r}")
    try:
        x, y, w, h, conf = (float(fields[i]) for i in range(2, 7))
    except ValueError:
        _fail(path, lineno, f"non-numeric box or confidence field in {line!r}")
    if frame < 1:
        _fail(path, lineno, f"frame must be >= 1, got {frame}")
    if w <= 0 or h <= 0:
        _fail(path, lineno, f"box width/height must be positive, got {w}x{h}")
    return frame, obj_id, BBox(x, y, w, h), conf


def _read_mot_rows(path) -> list[tuple[int, int, int, BBox, float]]:
    """Rows as (lineno, frame, id, box, conf), frame-sorted, order kept within a frame."""
    rows = []
    last_frame = None
    out_of_order = False
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = _parse_mot_line(path, lineno, line.strip())
            if last_frame is not None and row[0] < last_frame:
                out_of_order = True
            last_frame = row[0]
            rows.append((lineno, *row))
    if out_of_order:
        logger.warning("%s: frames out of order; re-sorting", path)
        rows.sort(key=lambda r: r[1])
    return rows


def read_detections(path) -> dict[int, list[Detection]]:
    """Per-frame detection lists; the id column is validated but ignored."""
    out: dict[int, list[Detection]] = {}
    for lineno, frame, _, box, conf in _read_mot_rows(path):
        if not 0.0 <= conf <= 1.0:
            _fail(path, lineno, f"detection confidence must be in [0, 1], got {conf}")
        ref = (frame, len(out.get(frame, [])))
        out.setdefault(frame, []).append(Detection(frame, box, conf, mask_ref=ref))
    return dict(sorted(out.items()))


def detection_sequence(per_frame: Mapping[int, Sequence[Detection]]) -> list[tuple[int, list[Detection]]]:
    """Contiguous (frame, detections) list from min to max frame, gaps empty."""
    if not per_frame:
        return []
    frames = sorted(per_frame)
    return [(f, list(per_frame.get(f, []))) for f in range(frames[0], frames[-1] + 1)]


def read_tracks(path) -> dict[int, dict[int, TrajectoryEntry]]:
    """Trajectory set from CSV; conf 0 is read back as an interpolated entry."""
    out: dict[int, dict[int, TrajectoryEntry]] = {}
    for lineno, frame, obj_id, box, conf in _read_mot_rows(path):
        track = out.setdefault(obj_id, {})
        if frame in track:
            _fail(path, lineno, f"duplicate entry for id {obj_id} at frame {frame}")
        track[frame] = TrajectoryEntry(box, conf, interpolated=(conf == 0.0))
    return {tid: dict(sorted(frames.items())) for tid, frames in sorted(out.items())}


def _mot_line(frame: int, obj_id: int, box: BBox, conf: float) -> str:
    return (
        f"{frame},{obj_id},{box.x:.6f},{box.y:.6f},{box.w:.6f},{box.h:.6f},{conf:.6f},-1,-1,-1\n"
    )


def write_tracks(path, trajectories: TrajectorySet) -> None:
    """Rows sorted by frame then id; interpolated entries get conf 0."""
    rows = []
    for tid in sorted(trajectories):
        for frame in sorted(trajectories[tid]):
            entry = trajectories[tid][frame]
            if isinstance(entry, BBox):
                box, conf = entry, 1.0
            else:
                box = entry.box
                conf = 0.0 if entry.interpolated else entry.confidence
            rows.append((frame, tid, box, conf))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for frame, tid, box, conf in rows:
            fh.write(_mot_line(frame, tid, box, conf))


def write_detections(path, per_frame: Mapping[int, Sequence[Detection]]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for frame in sorted(per_frame):
            for det in per_frame[frame]:
                fh.write(_mot_line(frame, -1, det.box, det.confidence))


def read_mask_manifest(path) -> dict[tuple[int, int], Path]:
    """(frame, det_index) -> mask path, resolved relative to the manifest."""
    base = Path(path).parent
    out: dict[tuple[int, int], Path] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = [f.strip() for f in line.strip().split(",")]
            if len(fields) != 3:
                _fail(path, lineno, f"expected 3 fields (frame,det_index,path), got {len(fields)}")
            try:
                frame = int(fields[0])
                det_index = int(fields[1])
            except ValueError:
                _fail(path, lineno, f"frame and det_index must be integers in {line.strip()!r}")
            if frame < 1 or det_index < 0:
                _fail(path, lineno, f"bad frame/det_index {frame},{det_index}")
            if not fields[2]:
                _fail(path, lineno, "empty mask path")
            key = (frame, det_index)
            if key in out:
                _fail(path, lineno, f"duplicate manifest entry for frame {frame} index {det_index}")
            mask_path = base / fields[2]
            if not mask_path.is_file():
                _fail(path, lineno, f"mask file not found: {mask_path}")
            out[key] = mask_path
    return out


class ManifestMaskSource:
    """Mask lookup backed by a manifest of PGM crops or PBM masks on disk.

    PBM files are used as-is; PGM crops go through threshold segmentation to
    produce the entity mask.  Loaded masks are cached per reference.
    """

    def __init__(self, manifest_path):
        self.paths = read_mask_manifest(manifest_path)
        self._cache: dict[tuple[int, int], Optional[BinaryMask]] = {}

    def get(self, ref, anchor: BBox) -> Optional[BinaryMask]:
        if ref in self._cache:
            return self._cache[ref]
        path = self.paths.get(ref)
        mask: Optional[BinaryMask] = None
        if path is not None:
            with open(path, "rb") as fh:
                magic = fh.read(2)
            if magic == b"P4":
                mask = BinaryMask(bits=read_pbm(path), anchor=anchor)
            elif magic == b"P5":
                mask = extract_entity(GrayCrop(pixels=read_pgm(path), anchor=anchor))
            else:
                raise FormatError(f"{path}: not a binary PGM/PBM file (magic {magic!r})")
        self._cache[ref] = mask
        return mask


def write_scenario(scenario: Scenario, outdir) -> dict[str, Path]:
    """Write detections.csv, gt.csv, and masks/ with a manifest; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "masks").mkdir(exist_ok=True)
    paths = {
        "detections": outdir / "detections.csv",
        "gt": outdir / "gt.csv",
        "masks": outdir / "masks.csv",
    }
    write_detections(paths["detections"], scenario.detections)
    write_tracks(paths["gt"], scenario.gt)
    with open(paths["masks"], "w", encoding="ascii", newline="\n") as fh:
        for frame, det_index in sorted(scenario.masks):
            rel = f"masks/{frame:06d}_{det_index:03d}.pbm"
            write_pbm(outdir / rel, scenario.masks[(frame, det_index)].bits)
            fh.write(f"{frame},{det_index},{rel}\n")
    return paths


_METRICS_KEYS = frozenset({"iou_gate"})


def _check_keys(section: str, data: dict, allowed: frozenset, path) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise FormatError(
            f"{path}: unknown {section} config key(s): {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def load_config(path) -> dict[str, dict]:
    """JSON config with optional sections tracker / scenario / metrics.

    Section keys mirror the TrackerConfig and ScenarioConfig field names;
    unknown keys anywhere are rejected so typos cannot silently fall back to
    defaults.  The arena is given as [x, y, w, h] and crossing_script as a
    list of [agent_a, agent_b, frame] triples.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be a JSON object")
    _check_keys("top-level", data, frozenset({"tracker", "scenario", "metrics"}), path)
    for section in data:
        if not isinstance(data[section], dict):
            raise FormatError(f"{path}: section {section!r} must be a JSON object")
    tracker_keys = frozenset(f.name for f in dataclasses.fields(TrackerConfig))
    scenario_keys = frozenset(f.name for f in dataclasses.fields(ScenarioConfig))
    _check_keys("tracker", data.get("tracker", {}), tracker_keys, path)
    _check_keys("scenario", data.get("scenario", {}), scenario_keys, path)
    _check_keys("metrics", data.get("metrics", {}), _METRICS_KEYS, path)
    return {
        "tracker": dict(data.get("tracker", {})),
        "scenario": dict(data.get("scenario", {})),
        "metrics": dict(data.get("metrics", {})),
    }


def tracker_config_from(section: Mapping) -> TrackerConfig:
    kwargs = dict(section)
    if kwargs.get("arena") is not None:
        kwargs["arena"] = BBox(*kwargs["arena"])
    return TrackerConfig(**kwargs)


def scenario_config_from(section: Mapping) -> ScenarioConfig:
    kwargs = dict(section)
    if "arena" in kwargs:
        kwargs["arena"] = BBox(*kwargs["arena"])
    if "crossing_script" in kwargs:
        kwargs["crossing_script"] = [tuple(ev) for ev in kwargs["crossing_script"]]
    return ScenarioConfig(**kwargs)
