"""Track lifecycle: labeled trajectories over filter estimates.

Matched tracks absorb their estimate; unassigned tracks coast on the motion
model for up to t_ts frames before being killed; unassigned estimates either
revive a visually similar dead track (keeping its label) or start a new one.
Coasting tracks are emitted in frame results and take part in the next
frame's association exactly like measured ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assoc import AssignmentResult
from .core import TrackerConfig
from .gmphd import Estimate, cosine_similarity
from .motion import MotionModel, predict_state

ACTIVE = "active"
PREDICTED = "predicted"
DEAD = "dead"

ORIGIN_MEASURED = "measured"
ORIGIN_PREDICTED = "predicted"


@dataclass
class Track:
    id: int
    status: str
    last_state: np.ndarray
    last_cov: np.ndarray
    history: list[tuple[int, np.ndarray, str]] = field(default_factory=list)
    feature_sum: np.ndarray | None = None
    confidence_sum: float = 0.0
    prediction_count: int = 0
    died_at: int | None = None

    def box(self) -> np.ndarray:
        """Last known or predicted box [cx, cy, w, h]."""
        return self.last_state[[0, 1, 4, 5]]

    def aggregated_feature(self) -> np.ndarray | None:
        """Confidence-weighted mean of the accumulated detection features.

        Returns None when nothing was accumulated or the accumulation
        cancelled out to (numerically) zero.
        """
        if self.feature_sum is None or self.confidence_sum <= 0.0:
            return None
        agg = self.feature_sum / self.confidence_sum
        if float(np.linalg.norm(agg)) < 1e-12:
            return None
        return agg

    def attach(self, estimate: Estimate, confidence: float, frame: int) -> "Track":
        """Append a measured estimate, refresh state and feature accumulators."""
        if self.status == DEAD:
            raise ValueError(f"cannot attach an estimate to dead track {self.id}")
        self.last_state = estimate.state.copy()
        self.last_cov = estimate.cov.copy()
        self.history.append((frame, self.last_state.copy(), ORIGIN_MEASURED))
        self.prediction_count = 0
        self.status = ACTIVE
        if estimate.feature is not None:
            if self.feature_sum is None:
                self.feature_sum = np.zeros_like(estimate.feature, dtype=float)
            self.feature_sum = self.feature_sum + confidence * estimate.feature
            self.confidence_sum += confidence
        return self

    def predict_unassigned(self, model: MotionModel, config: TrackerConfig,
                           frame: int) -> "Track":
        """Coast one frame on the motion model; allowed t_ts times in a row."""
        if self.status == DEAD:
            raise ValueError(f"cannot predict dead track {self.id}")
        if self.prediction_count >= config.t_ts:
            raise ValueError(
                f"track {self.id} exhausted its {config.t_ts} predictions; kill it instead")
        self.last_state, self.last_cov = predict_state(self.last_state, self.last_cov, model)
        self.prediction_count += 1
        self.status = PREDICTED
        self.history.append((frame, self.last_state.copy(), ORIGIN_PREDICTED))
        return self

    def kill(self, frame: int) -> "Track":
        if self.status == DEAD:
            raise ValueError(f"track {self.id} is already dead")
        self.status = DEAD
        self.died_at = frame
        return self

    def revive(self, estimate: Estimate, frame: int) -> "Track":
        """Re-identification hit: restore the label, reset state to the estimate.

        Gap frames are not backfilled and the feature accumulator is kept.
        """
        self.status = ACTIVE
        self.died_at = None
        self.prediction_count = 0
        self.last_state = estimate.state.copy()
        self.last_cov = estimate.cov.copy()
        return self


@dataclass
class ResultBox:
    track_id: int
    box: np.ndarray  # [cx, cy, w, h]
    origin: str


@dataclass
class FrameResult:
    frame_index: int
    boxes: list[ResultBox] = field(default_factory=list)


def reidentify(estimate: Estimate, dead_pool: list[Track], config: TrackerConfig) -> Track | None:
    """Best dead track whose aggregated feature exceeds the similarity threshold.

    Returns None when the estimate has no feature, the pool is empty, or the
    best similarity does not clear v_s_ts.
    """
    if estimate.feature is None:
        return None
    best: Track | None = None
    best_sim = -np.inf
    for track in dead_pool:
        agg = track.aggregated_feature()
        if agg is None:
            continue
        sim = cosine_similarity(agg, estimate.feature)
        if sim > best_sim:
            best_sim = sim
            best = track
    if best is not None and best_sim > config.v_s_ts:
        return best
    return None


class TrackManager:
    """Owns label allocation, the live track set, and the dead pool."""

    def __init__(self, config: TrackerConfig, model: MotionModel):
        self.config = config
        self.model = model
        self.tracks: dict[int, Track] = {}
        self.dead_pool: list[Track] = []
        self._next_id = 1

    def live_tracks(self) -> list[Track]:
        return [t for t in self.tracks.values() if t.status != DEAD]

    def _new_track(self, estimate: Estimate, frame: int) -> Track:
        track = Track(
            id=self._next_id,
            status=ACTIVE,
            last_state=estimate.state.copy(),
            last_cov=estimate.cov.copy(),
        )
        self._next_id += 1
        track.attach(estimate, estimate.confidence, frame)
        self.tracks[track.id] = track
        return track

    def _kill(self, track: Track, frame: int) -> None:
        track.kill(frame)
        del self.tracks[track.id]
        self.dead_pool.append(track)
        limit = self.config.reid_pool_max
        if limit > 0 and len(self.dead_pool) > limit:
            self.dead_pool = self.dead_pool[-limit:]

    def step(self, estimates: list[Estimate], assignment: AssignmentResult,
             frame: int) -> FrameResult:
        """Apply one frame's assignment outcome and emit the labeled boxes."""
        for track_id, est_idx, _cost in assignment.matched:
            est = estimates[est_idx]
            self.tracks[track_id].attach(est, est.confidence, frame)

        for track_id in assignment.unassigned_tracks:
            track = self.tracks[track_id]
            if track.prediction_count >= self.config.t_ts:
                self._kill(track, frame)
            else:
                track.predict_unassigned(self.model, self.config, frame)

        for est_idx in assignment.unassigned_estimates:
            est = estimates[est_idx]
            revived = reidentify(est, self.dead_pool, self.config)
            if revived is not None:
                self.dead_pool.remove(revived)
                revived.revive(est, frame)
                revived.attach(est, est.confidence, frame)
                self.tracks[revived.id] = revived
            else:
                self._new_track(est, frame)

        result = FrameResult(frame_index=frame)
        for track in sorted(self.live_tracks(), key=lambda t: t.id):
            origin = ORIGIN_PREDICTED if track.status == PREDICTED else ORIGIN_MEASURED
            result.boxes.append(ResultBox(track_id=track.id, box=track.box(), origin=origin))
        return result
