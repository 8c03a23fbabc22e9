"""Per-frame tracking loop wiring the filter, association, and track store.

Each frame: spawn birth components from confident detections, predict the
posterior and add the births, update against all detections, reduce
(prune, merge, cap), extract estimates, associate them with live tracks,
and apply the lifecycle step (attach / coast / kill / revive / create).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import gmphd
from .assoc import build_cost, solve_assignment
from .core import Detection, FrameContext, Intensity, TrackerConfig
from .motion import MotionModel, build_model
from .tracks import FrameResult, TrackManager


@dataclass
class FrameLog:
    frame: int
    num_detections: int
    num_components: int
    num_estimates: int
    num_tracks: int
    millis: float


@dataclass
class RunStats:
    frames: int = 0
    seconds: float = 0.0
    per_frame: list[FrameLog] = field(default_factory=list)

    @property
    def fps(self) -> float:
        return self.frames / self.seconds if self.seconds > 0 else float("inf")

    def log_csv(self) -> str:
        lines = ["frame,num_detections,num_components,num_estimates,num_tracks,millis"]
        for f in self.per_frame:
            lines.append(f"{f.frame},{f.num_detections},{f.num_components},"
                         f"{f.num_estimates},{f.num_tracks},{f.millis:.3f}")
        return "\n".join(lines) + "\n"


class Tracker:
    """Online tracker instance; single writer, one scene per instance."""

    def __init__(self, config: TrackerConfig, width: float, height: float,
                 model: MotionModel | None = None, provider=None):
        self.config = config.validate()
        self.width = width
        self.height = height
        self.model = model if model is not None else build_model(config)
        self.provider = provider
        self.rng = np.random.default_rng(config.rng_seed)
        self.posterior = Intensity()
        self.manager = TrackManager(config, self.model)
        self.stats = RunStats()

    def step(self, frame_index: int, detections: list[Detection],
             frame_image: np.ndarray | None = None) -> FrameResult:
        """Process one frame's detections and return the labeled boxes."""
        start = time.perf_counter()
        ctx = FrameContext(frame_index=frame_index, width=self.width, height=self.height)

        if self.provider is not None:
            feats = self.provider.features_for_frame(frame_index, frame_image, detections)
            detections = [replace(det, feature=feat) for det, feat in zip(detections, feats)]

        v_prev = len(self.posterior)
        births = gmphd.birth_intensity(detections, self.config, self.model)
        predicted = gmphd.predict(self.posterior, births, self.config, self.model)
        updated = gmphd.update(predicted, detections, self.config, self.model, ctx)
        reduced = gmphd.cap(
            gmphd.merge(gmphd.prune(updated, self.config), self.config),
            v_prev, len(detections), self.config, self.rng)
        self.posterior = reduced
        estimates = gmphd.extract(reduced, self.config)

        live = self.manager.live_tracks()
        cost = build_cost(live, estimates, ctx, self.config)
        assignment = solve_assignment(cost, self.config)
        result = self.manager.step(estimates, assignment, frame_index)

        elapsed = time.perf_counter() - start
        self.stats.frames += 1
        self.stats.seconds += elapsed
        self.stats.per_frame.append(FrameLog(
            frame=frame_index,
            num_detections=len(detections),
            num_components=len(reduced),
            num_estimates=len(estimates),
            num_tracks=len(self.manager.live_tracks()),
            millis=elapsed * 1e3,
        ))
        return result


def run_tracker(det_set, config: TrackerConfig, width: float, height: float,
                num_frames: int | None = None, provider=None,
                frame_images=None) -> tuple[list[FrameResult], RunStats]:
    """Track a whole detection set frame by frame.

    `frame_images` may be a dict or callable mapping frame index to pixel
    data for providers that need it.
    """
    tracker = Tracker(config, width, height, provider=provider)
    last = num_frames if num_frames is not None else det_set.num_frames
    results = []
    for frame in range(1, last + 1):
        detections = det_set.for_frame(frame)
        image = None
        if frame_images is not None:
            image = frame_images(frame) if callable(frame_images) else frame_images.get(frame)
        results.append(tracker.step(frame, detections, image))
    return results, tracker.stats
