"""Static SVG rendering of trajectories.

One polyline of box centers per identity, each id in its own color.  Output
is a standalone SVG built from sorted inputs with fixed number formatting,
so identical trajectories always produce identical bytes.
"""

from __future__ import annotations

from .geometry import as_box
from .metrics import TrajectorySet

_GOLDEN_ANGLE = 137.508


def _color(index: int) -> str:
    return f"hsl({(index * _GOLDEN_ANGLE) % 360.0:.1f},70%,45%)"


def render_svg(trajectories: TrajectorySet, width: int = 800, height: int = 600) -> str:
    """Standalone SVG with one center-point polyline per id, frame order."""
    tracks = []
    for tid in sorted(trajectories):
        points = []
        for frame in sorted(trajectories[tid]):
            box = as_box(trajectories[tid][frame])
            points.append((box.x + box.w / 2.0, box.y + box.h / 2.0))
        if points:
            tracks.append((tid, points))
    if tracks:
        xs = [p[0] for _, pts in tracks for p in pts]
        ys = [p[1] for _, pts in tracks for p in pts]
        pad_x = max(1.0, 0.05 * (max(xs) - min(xs)))
        pad_y = max(1.0, 0.05 * (max(ys) - min(ys)))
        vb = (min(xs) - pad_x, min(ys) - pad_y, max(xs) - min(xs) + 2 * pad_x, max(ys) - min(ys) + 2 * pad_y)
    else:
        vb = (0.0, 0.0, 1.0, 1.0)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{vb[0]:.2f} {vb[1]:.2f} {vb[2]:.2f} {vb[3]:.2f}">',
        f'<rect x="{vb[0]:.2f}" y="{vb[1]:.2f}" width="{vb[2]:.2f}" height="{vb[3]:.2f}" fill="white"/>',
    ]
    for index, (tid, points) in enumerate(tracks):
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        lines.append(
            f'<polyline fill="none" stroke="{_color(index)}" stroke-width="1.5" '
            f'points="{coords}"><title>id {tid}</title></polyline>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(path, trajectories: TrajectorySet, width: int = 800, height: int = 600) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_svg(trajectories, width, height))
