"""One-to-one track/detection matching.

The solver maximizes matching cardinality over the allowed (non-forbidden)
pairs first, minimizes total cost among those, and finally returns the
lexicographically smallest pair set among equal-cost optima so repeated runs
produce identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BBox, iou

#: Sentinel marking a pair that must never appear in a matching.
FORBIDDEN = float("inf")

_COST_TOL = 1e-9


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]
    total_cost: float

    def row_to_col(self) -> dict[int, int]:
        return dict(self.pairs)


def iou_cost_matrix(prev_boxes, cur_boxes, gate: float) -> np.ndarray:
    """Cost matrix 1 - IoU over box pairs, FORBIDDEN where IoU falls below ``gate``."""
    if not 0.0 <= gate <= 1.0:
        raise ValueError(f"gate must be in [0, 1], got {gate}")
    m = np.full((len(prev_boxes), len(cur_boxes)), FORBIDDEN)
    for r, a in enumerate(prev_boxes):
        for c, b in enumerate(cur_boxes):
            v = iou(a, b)
            if v >= gate:
                m[r, c] = 1.0 - v
    return m


def _empty(rows: int, cols: int) -> Matching:
    return Matching((), tuple(range(rows)), tuple(range(cols)), 0.0)


def _solve_padded(work: np.ndarray, finite: np.ndarray) -> dict[int, int]:
    """Min-cost assignment on ``work`` (forbidden already replaced), feasible pairs only."""
    rows, cols = linear_sum_assignment(work)
    return {int(r): int(c) for r, c in zip(rows, cols) if finite[r, c]}


def _sub_optimum(
    work: np.ndarray, finite: np.ndarray, costs: np.ndarray, row_ids: list[int], col_ids: list[int]
) -> tuple[int, float, dict[int, int]]:
    """Best (cardinality, cost, assignment) on the given row/col subset."""
    if not row_ids or not col_ids:
        return 0, 0.0, {}
    sub = work[np.ix_(row_ids, col_ids)]
    rr, cc = linear_sum_assignment(sub)
    card = 0
    total = 0.0
    assign: dict[int, int] = {}
    for i, j in zip(rr, cc):
        r, c = row_ids[i], col_ids[j]
        if finite[r, c]:
            card += 1
            total += float(costs[r, c])
            assign[r] = c
    return card, total, assign


def solve(costs) -> Matching:
    """Optimal matching of a rectangular cost matrix with forbidden entries.

    Among all matchings restricted to finite-cost pairs, the result has maximum
    cardinality, then minimum total cost, then the lexicographically smallest
    pair set ordered by (row, col).  An empty matrix yields an empty matching.
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-d, got shape {c.shape}")
    n_rows, n_cols = c.shape
    if n_rows == 0 or n_cols == 0:
        return _empty(n_rows, n_cols)
    if np.isnan(c).any():
        raise ValueError("cost matrix contains NaN")
    finite = np.isfinite(c)
    if not finite.all() and not np.isposinf(c[~finite]).all():
        raise ValueError("non-finite costs other than FORBIDDEN are not allowed")
    if finite.any() and float(c[finite].min()) < 0:
        raise ValueError("costs must be non-negative")
    if not finite.any():
        return _empty(n_rows, n_cols)

    # a single forbidden/dummy pick costs more than every feasible pair combined,
    # so minimizing the padded total maximizes feasible cardinality first
    big = float(c[finite].sum()) + 1.0
    work = np.where(finite, c, big)
    reference = _solve_padded(work, finite)
    card_star = len(reference)
    cost_star = sum(float(c[r, col]) for r, col in reference.items())

    # fix rows in ascending order onto their smallest globally-optimal column;
    # the current reference solution certifies its own column without a re-solve
    fixed: dict[int, int] = {}
    fixed_cost = 0.0
    used_cols: set[int] = set()
    for r in range(n_rows):
        ref_col = reference.get(r)
        chosen = None
        for col in range(n_cols):
            if col in used_cols or not finite[r, col]:
                continue
            if col == ref_col:
                chosen = col
                break
            rest_rows = [r2 for r2 in range(r + 1, n_rows)]
            rest_cols = [c2 for c2 in range(n_cols) if c2 not in used_cols and c2 != col]
            card, total, assign = _sub_optimum(work, finite, c, rest_rows, rest_cols)
            need_card = card_star - len(fixed) - 1
            need_cost = cost_star - fixed_cost - float(c[r, col])
            if card == need_card and math.isclose(total, need_cost, rel_tol=_COST_TOL, abs_tol=_COST_TOL):
                chosen = col
                reference = assign
                break
        if chosen is None:
            continue  # row unmatched in every optimal completion
        fixed[r] = chosen
        fixed_cost += float(c[r, chosen])
        used_cols.add(chosen)

    pairs = tuple(sorted(fixed.items()))
    total_cost = 0.0
    for r, col in pairs:
        total_cost += float(c[r, col])
    unmatched_rows = tuple(r for r in range(n_rows) if r not in fixed)
    unmatched_cols = tuple(col for col in range(n_cols) if col not in used_cols)
    return Matching(pairs, unmatched_rows, unmatched_cols, total_cost)
