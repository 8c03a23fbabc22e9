"""Tracking evaluation: the CLEAR metric subset plus identity F1.

Frame-wise matching requires at least 50% IoU; pairs matched in the previous
frame keep their match while they still clear the gate (continuity
preference), and the remainder is matched by minimal-cost assignment on
1 - IoU. Identity switches count changes of a ground-truth track's matched
hypothesis id relative to its most recent match; fragmentations count
tracked -> untracked -> tracked transitions. IDF1 is computed from a single
globally optimal one-to-one assignment between ground-truth and hypothesis
ids over the whole sequence.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assoc import box_iou
from .io import GroundTruth
from .tracks import FrameResult

IOU_GATE = 0.5


@dataclass
class FrameStats:
    frame: int
    num_gt: int
    num_hyp: int
    matched: int
    fp: int
    fn: int
    idsw: int


@dataclass
class EvalReport:
    mota: float
    motp: float
    idf1: float
    fp: int
    fn: int
    idsw: int
    frag: int
    mt: float  # percent of gt trajectories mostly tracked
    ml: float  # percent of gt trajectories mostly lost
    faf: float  # false positives per frame
    num_frames: int
    num_gt_boxes: int
    per_frame: list[FrameStats] = field(default_factory=list)

    def as_csv(self) -> str:
        header = "mota,motp,idf1,fp,fn,idsw,frag,mt,ml,faf"
        row = (f"{self.mota:.4f},{self.motp:.4f},{self.idf1:.4f},{self.fp},{self.fn},"
               f"{self.idsw},{self.frag},{self.mt:.2f},{self.ml:.2f},{self.faf:.3f}")
        return header + "\n" + row + "\n"

    def as_table(self) -> str:
        rows = [
            ("MOTA", f"{self.mota:.4f}"), ("MOTP", f"{self.motp:.4f}"),
            ("IDF1", f"{self.idf1:.4f}"), ("FP", str(self.fp)), ("FN", str(self.fn)),
            ("IDSw", str(self.idsw)), ("Frag", str(self.frag)),
            ("MT", f"{self.mt:.2f}%"), ("ML", f"{self.ml:.2f}%"),
            ("FAF", f"{self.faf:.3f}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"

    def per_frame_csv(self) -> str:
        lines = ["frame,num_gt,num_hyp,matched,fp,fn,idsw,frame_mota"]
        for s in self.per_frame:
            denom = max(s.num_gt, 1)
            frame_mota = 1.0 - (s.fp + s.fn + s.idsw) / denom
            lines.append(f"{s.frame},{s.num_gt},{s.num_hyp},{s.matched},{s.fp},{s.fn},"
                         f"{s.idsw},{frame_mota:.4f}")
        return "\n".join(lines) + "\n"


def evaluate(gt: GroundTruth, results: list[FrameResult]) -> EvalReport:
    """Score tracker output against ground truth over a common frame range."""
    result_frames = {r.frame_index: r for r in results}
    if len(result_frames) != len(results):
        raise ValueError("duplicate frame indices in results")
    num_frames = max(result_frames) if result_frames else 0
    if gt.num_frames > num_frames:
        raise ValueError(
            f"ground truth runs to frame {gt.num_frames} but results stop at {num_frames}")

    total_fp = total_fn = total_idsw = 0
    total_matched = 0
    iou_sum = 0.0
    num_gt_boxes = 0
    num_hyp_boxes = 0
    per_frame: list[FrameStats] = []

    prev_match: dict[int, int] = {}     # gt id -> hyp id matched in previous frame
    last_match: dict[int, int] = {}     # gt id -> most recent matched hyp id
    tracked_frames: dict[int, list[int]] = {}  # gt id -> frames where matched
    gt_frames: dict[int, list[int]] = {}       # gt id -> frames where present

    # identity co-occurrence counts for IDF1
    id_pairs: dict[tuple[int, int], int] = {}
    hyp_totals: dict[int, int] = {}
    gt_totals: dict[int, int] = {}

    for frame in range(1, num_frames + 1):
        gt_rows = [g for g in gt.for_frame(frame) if g.considered]
        hyp_rows = result_frames[frame].boxes if frame in result_frames else []
        num_gt_boxes += len(gt_rows)
        num_hyp_boxes += len(hyp_rows)
        for g in gt_rows:
            gt_frames.setdefault(g.gt_id, []).append(frame)
            gt_totals[g.gt_id] = gt_totals.get(g.gt_id, 0) + 1
        for h in hyp_rows:
            hyp_totals[h.track_id] = hyp_totals.get(h.track_id, 0) + 1

        gt_by_id = {g.gt_id: g for g in gt_rows}
        hyp_by_id = {h.track_id: h for h in hyp_rows}
        iou = np.zeros((len(gt_rows), len(hyp_rows)))
        for i, g in enumerate(gt_rows):
            for j, h in enumerate(hyp_rows):
                iou[i, j] = box_iou(g.box, h.box)

        # all gate-passing pairs count toward identity co-occurrence
        for i, g in enumerate(gt_rows):
            for j, h in enumerate(hyp_rows):
                if iou[i, j] >= IOU_GATE:
                    key = (g.gt_id, h.track_id)
                    id_pairs[key] = id_pairs.get(key, 0) + 1

        gt_index = {g.gt_id: i for i, g in enumerate(gt_rows)}
        hyp_index = {h.track_id: j for j, h in enumerate(hyp_rows)}
        matches: dict[int, int] = {}

        # continuity: keep last frame's pairs that still clear the gate
        for gid, hid in prev_match.items():
            if gid in gt_by_id and hid in hyp_by_id:
                if iou[gt_index[gid], hyp_index[hid]] >= IOU_GATE:
                    matches[gid] = hid

        free_gt = [g.gt_id for g in gt_rows if g.gt_id not in matches]
        used_hyp = set(matches.values())
        free_hyp = [h.track_id for h in hyp_rows if h.track_id not in used_hyp]
        if free_gt and free_hyp:
            cost = np.ones((len(free_gt), len(free_hyp)))
            for a, gid in enumerate(free_gt):
                for b, hid in enumerate(free_hyp):
                    pair_iou = iou[gt_index[gid], hyp_index[hid]]
                    if pair_iou >= IOU_GATE:
                        cost[a, b] = 1.0 - pair_iou
            rows, cols = linear_sum_assignment(cost)
            for a, b in zip(rows, cols):
                gid, hid = free_gt[a], free_hyp[b]
                if iou[gt_index[gid], hyp_index[hid]] >= IOU_GATE:
                    matches[gid] = hid

        frame_idsw = 0
        for gid, hid in matches.items():
            if gid in last_match and last_match[gid] != hid:
                frame_idsw += 1
            last_match[gid] = hid
            tracked_frames.setdefault(gid, []).append(frame)
            iou_sum += iou[gt_index[gid], hyp_index[hid]]

        matched = len(matches)
        fp = len(hyp_rows) - matched
        fn = len(gt_rows) - matched
        total_fp += fp
        total_fn += fn
        total_idsw += frame_idsw
        total_matched += matched
        per_frame.append(FrameStats(frame=frame, num_gt=len(gt_rows), num_hyp=len(hyp_rows),
                                    matched=matched, fp=fp, fn=fn, idsw=frame_idsw))
        prev_match = matches

    # fragmentations: gaps strictly inside a gt track's tracked span
    total_frag = 0
    for gid, frames in tracked_frames.items():
        frame_set = set(frames)
        segments = 0
        prev_tracked = False
        for f in sorted(gt_frames.get(gid, [])):
            is_tracked = f in frame_set
            if is_tracked and not prev_tracked:
                segments += 1
            prev_tracked = is_tracked
        if segments > 1:
            total_frag += segments - 1

    # MT / ML over gt trajectories
    num_traj = len(gt_frames)
    mt_count = ml_count = 0
    for gid, frames in gt_frames.items():
        ratio = len(tracked_frames.get(gid, [])) / len(frames)
        if ratio >= 0.8:
            mt_count += 1
        elif ratio < 0.2:
            ml_count += 1

    # IDF1 via optimal one-to-one id assignment maximizing co-located frames
    gt_ids = sorted(gt_totals)
    hyp_ids = sorted(hyp_totals)
    idtp = 0
    if gt_ids and hyp_ids and id_pairs:
        gt_pos = {gid: i for i, gid in enumerate(gt_ids)}
        hyp_pos = {hid: j for j, hid in enumerate(hyp_ids)}
        gain = np.zeros((len(gt_ids), len(hyp_ids)))
        for (gid, hid), count in id_pairs.items():
            gain[gt_pos[gid], hyp_pos[hid]] = count
        rows, cols = linear_sum_assignment(-gain)
        idtp = int(gain[rows, cols].sum())

    mota = 1.0 - (total_fp + total_fn + total_idsw) / num_gt_boxes if num_gt_boxes else 1.0
    motp = iou_sum / total_matched if total_matched else 0.0
    idf1 = 2.0 * idtp / (num_gt_boxes + num_hyp_boxes) if (num_gt_boxes + num_hyp_boxes) else 1.0
    return EvalReport(
        mota=mota,
        motp=motp,
        idf1=idf1,
        fp=total_fp,
        fn=total_fn,
        idsw=total_idsw,
        frag=total_frag,
        mt=100.0 * mt_count / num_traj if num_traj else 0.0,
        ml=100.0 * ml_count / num_traj if num_traj else 0.0,
        faf=total_fp / num_frames if num_frames else 0.0,
        num_frames=num_frames,
        num_gt_boxes=num_gt_boxes,
        per_frame=per_frame,
    )
