"""Command-line interface.

Subcommands: track, evaluate, simulate, analyze, plot.  Errors exit nonzero
with a message on stderr; warnings go to the log stream and never abort.
All outputs are deterministic: identical inputs, flags and seeds give
byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .formats import (
    FormatError,
    ManifestMaskSource,
    detection_sequence,
    load_config,
    read_detections,
    read_tracks,
    scenario_config_from,
    tracker_config_from,
    write_scenario,
    write_tracks,
)
from .metrics import evaluate_tracking
from .plotting import write_svg
from .simulator import adjacent_iou_stats, generate
from .tracker import run_tracker

logger = logging.getLogger("swimtrack")


def _load_sections(config_path) -> dict[str, dict]:
    if config_path is None:
        return {"tracker": {}, "scenario": {}, "metrics": {}}
    return load_config(config_path)


def _cmd_track(args) -> int:
    sections = _load_sections(args.config)
    config = tracker_config_from(sections["tracker"])
    if args.disable_interaction:
        config = dataclasses.replace(config, enable_interaction=False)
    if args.disable_refind:
        config = dataclasses.replace(config, enable_refind=False)
    detections = read_detections(args.detections)
    mask_source = ManifestMaskSource(args.masks) if args.masks else None
    trajectories, state = run_tracker(detection_sequence(detections), config, mask_source)
    for message in state.warnings:
        logger.warning(message)
    write_tracks(args.output, trajectories)
    print(f"tracked {len(trajectories)} identities over {len(detections)} frames -> {args.output}")
    return 0


def _cmd_evaluate(args) -> int:
    sections = _load_sections(args.config)
    iou_gate = sections["metrics"].get("iou_gate", 0.5)
    gt = read_tracks(args.gt)
    hyp = read_tracks(args.tracks)
    report = evaluate_tracking(gt, hyp, iou_gate)
    sys.stdout.write(report.to_text())
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_json())
    return 0


def _cmd_simulate(args) -> int:
    sections = _load_sections(args.config)
    config = scenario_config_from(sections["scenario"])
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    scenario = generate(config)
    paths = write_scenario(scenario, args.output)
    n_dets = sum(len(v) for v in scenario.detections.values())
    print(
        f"simulated {config.n_agents} agents x {config.n_frames} frames "
        f"({n_dets} detections, {len(scenario.dropout_log)} dropped) -> {paths['detections'].parent}"
    )
    return 0


def _cmd_analyze(args) -> int:
    stats = adjacent_iou_stats(read_tracks(args.gt))
    payload = {
        "pooled_mean": "NOT-APPLICABLE" if stats.pooled_mean is None else stats.pooled_mean,
        "per_track_mean": {str(tid): m for tid, m in sorted(stats.per_track_mean.items())},
        "histogram_bins": 20,
        "histogram_range": [0.0, 1.0],
        "histogram": list(stats.histogram),
        "n_pairs": stats.n_pairs,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_plot(args) -> int:
    write_svg(args.output, read_tracks(args.tracks))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swimtrack",
        description="Overlap-based multi-object tracking, evaluation and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="associate detections into identity tracks")
    p.add_argument("--detections", required=True, help="detections CSV (10-field rows, id -1)")
    p.add_argument("--masks", help="mask manifest CSV (frame,det_index,path)")
    p.add_argument("--output", required=True, help="output tracks CSV")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--disable-interaction", action="store_true",
                   help="skip mask-based disambiguation of contended overlaps")
    p.add_argument("--disable-refind", action="store_true",
                   help="skip the lost-track buffer and gap interpolation")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("evaluate", help="score tracks against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth tracks CSV")
    p.add_argument("--tracks", required=True, help="hypothesis tracks CSV")
    p.add_argument("--config", help="JSON config file (metrics.iou_gate)")
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("simulate", help="generate a synthetic scenario on disk")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--config", help="JSON config file (scenario section)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="adjacent-frame IoU statistics of a trajectory file")
    p.add_argument("--gt", required=True, help="trajectory CSV to analyze")
    p.add_argument("--output", help="write JSON stats here instead of stdout")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("plot", help="render trajectories to a standalone SVG")
    p.add_argument("--tracks", required=True, help="trajectory CSV to draw")
    p.add_argument("--output", required=True, help="output SVG path")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
