"""Overlap-driven multi-object tracking for small swimming animals.

Detections are associated frame to frame by box IoU, contended overlaps are
resolved with pixel-level entity masks, and briefly lost identities are
re-found from a spatial buffer with interpolated gap boxes.  Ships with
CLEAR-MOT / identity metrics, a synthetic scenario generator, MOT-style CSV
interchange, and a command-line front end.
"""

from .assignment import FORBIDDEN, Matching, iou_cost_matrix, solve
from .estimator import IouAssociationTracker
from .formats import (
    FormatError,
    ManifestMaskSource,
    detection_sequence,
    load_config,
    read_detections,
    read_mask_manifest,
    read_tracks,
    scenario_config_from,
    tracker_config_from,
    write_detections,
    write_scenario,
    write_tracks,
)
from .geometry import (
    BBox,
    as_box,
    buffer_region,
    center,
    contains,
    interpolate_boxes,
    iou,
)
from .masks import (
    BinaryMask,
    GrayCrop,
    binarize,
    entity_iou,
    extract_entity,
    largest_connected_component,
    otsu_level,
    read_pbm,
    read_pgm,
    write_pbm,
    write_pgm,
)
from .metrics import (
    ClearResult,
    IdResult,
    MetricsReport,
    clear_mot,
    evaluate_tracking,
    id_metrics,
)
from .plotting import render_svg, write_svg
from .simulator import (
    MODERATE_OVERLAP_CONFIG,
    AdjacentIouStats,
    DictMaskSource,
    Scenario,
    ScenarioConfig,
    adjacent_iou_stats,
    generate,
)
from .tracker import (
    Detection,
    Track,
    TrackerConfig,
    TrackerState,
    TrackStatus,
    TrajectoryEntry,
    finalize,
    init_tracks,
    run_tracker,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "iou",
    "center",
    "contains",
    "buffer_region",
    "interpolate_boxes",
    "as_box",
    "GrayCrop",
    "BinaryMask",
    "otsu_level",
    "binarize",
    "largest_connected_component",
    "entity_iou",
    "extract_entity",
    "read_pgm",
    "write_pgm",
    "read_pbm",
    "write_pbm",
    "FORBIDDEN",
    "Matching",
    "solve",
    "iou_cost_matrix",
    "Detection",
    "Track",
    "TrackStatus",
    "TrackerConfig",
    "TrackerState",
    "TrajectoryEntry",
    "init_tracks",
    "step",
    "finalize",
    "run_tracker",
    "ClearResult",
    "IdResult",
    "MetricsReport",
    "clear_mot",
    "id_metrics",
    "evaluate_tracking",
    "ScenarioConfig",
    "Scenario",
    "AdjacentIouStats",
    "DictMaskSource",
    "generate",
    "adjacent_iou_stats",
    "MODERATE_OVERLAP_CONFIG",
    "FormatError",
    "ManifestMaskSource",
    "read_detections",
    "read_tracks",
    "write_tracks",
    "write_detections",
    "write_scenario",
    "read_mask_manifest",
    "detection_sequence",
    "load_config",
    "tracker_config_from",
    "scenario_config_from",
    "render_svg",
    "write_svg",
    "IouAssociationTracker",
    "__version__",
]
