"""Tracks-to-estimates association: fused distance/appearance cost matrix and
its optimal assignment with a cost gate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import FrameContext, TrackerConfig
from .gmphd import Estimate, cosine_similarity  # noqa: F401  (re-exported)


@dataclass
class CostMatrix:
    values: np.ndarray  # shape (num tracks, num estimates)
    row_ids: list[int]  # track labels
    col_ids: list[int]  # estimate indices


@dataclass
class AssignmentResult:
    matched: list[tuple[int, int, float]] = field(default_factory=list)  # (track_id, estimate_index, cost)
    unassigned_tracks: list[int] = field(default_factory=list)
    unassigned_estimates: list[int] = field(default_factory=list)


def normalized_distance(box_a: np.ndarray, box_b: np.ndarray, ctx: FrameContext) -> float:
    """Euclidean distance between box centers, normalized by frame size."""
    dx = (box_a[0] - box_b[0]) / ctx.width
    dy = (box_a[1] - box_b[1]) / ctx.height
    return float(np.hypot(dx, dy))


def box_iou(box_a: np.ndarray, box_b: np.ndarray) -> float:
    """Intersection over union of two center-form boxes."""
    ax1, ay1 = box_a[0] - box_a[2] / 2, box_a[1] - box_a[3] / 2
    ax2, ay2 = box_a[0] + box_a[2] / 2, box_a[1] + box_a[3] / 2
    bx1, by1 = box_b[0] - box_b[2] / 2, box_b[1] - box_b[3] / 2
    bx2, by2 = box_b[0] + box_b[2] / 2, box_b[1] + box_b[3] / 2
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = box_a[2] * box_a[3] + box_b[2] * box_b[3] - inter
    return float(inter / union)


def build_cost(tracks, estimates: list[Estimate], ctx: FrameContext,
               config: TrackerConfig) -> CostMatrix:
    """Fused cost (1 - eta) * distance + eta * (1 - visual similarity).

    The track side uses its last known or predicted box and its aggregated
    feature; visual similarity falls back to 0 when either side lacks a
    feature. With use_iou_cost the distance term is 1 - IoU instead of the
    normalized center distance.
    """
    n, m = len(tracks), len(estimates)
    values = np.zeros((n, m))
    track_feats = [t.aggregated_feature() for t in tracks]
    for i, t in enumerate(tracks):
        t_box = t.box()
        for j, e in enumerate(estimates):
            if config.use_iou_cost:
                d = 1.0 - box_iou(t_box, e.box)
            else:
                d = normalized_distance(t_box, e.box, ctx)
            if track_feats[i] is not None and e.feature is not None:
                v_s = cosine_similarity(track_feats[i], e.feature)
            else:
                v_s = 0.0
            values[i, j] = (1.0 - config.eta) * d + config.eta * (1.0 - v_s)
    return CostMatrix(values=values, row_ids=[t.id for t in tracks], col_ids=list(range(m)))


def solve_assignment(cost: CostMatrix, config: TrackerConfig) -> AssignmentResult:
    """Globally minimal matching on the rectangular cost matrix.

    Matches whose cost is at or above c_ts are demoted to unassigned on both
    sides; every unmatched row/column lands in the unassigned lists.
    """
    n, m = cost.values.shape
    result = AssignmentResult()
    if n == 0 or m == 0:
        result.unassigned_tracks = list(cost.row_ids)
        result.unassigned_estimates = list(cost.col_ids)
        return result
    if not np.all(np.isfinite(cost.values)):
        raise ValueError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost.values)
    matched_rows, matched_cols = set(), set()
    for r, c in zip(rows, cols):
        value = float(cost.values[r, c])
        if value < config.c_ts:
            result.matched.append((cost.row_ids[r], cost.col_ids[c], value))
            matched_rows.add(r)
            matched_cols.add(c)
    result.unassigned_tracks = [cost.row_ids[r] for r in range(n) if r not in matched_rows]
    result.unassigned_estimates = [cost.col_ids[c] for c in range(m) if c not in matched_cols]
    return result
