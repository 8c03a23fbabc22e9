"""MOTChallenge-style file ingestion and result writing.

Detection and ground-truth files are comma-separated with no header, one box
per line, frame indices starting at 1 and boxes stored top-left. Boxes are
converted to center form on read and back on write. Detection scores that
fall outside [0, 1] anywhere in a file are min-max normalized per file.
"""
from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, field

import numpy as np

from .assoc import box_iou
from .core import (
    ConfigError,
    Detection,
    TrackerConfig,
    box_center_conversion,
    box_top_left_conversion,
    default_config,
)
from .tracks import FrameResult

log = logging.getLogger(__name__)


@dataclass
class DetectionFrameSet:
    """Detections grouped by frame index (1-based)."""

    frames: dict[int, list[Detection]] = field(default_factory=dict)

    @property
    def num_frames(self) -> int:
        return max(self.frames) if self.frames else 0

    def for_frame(self, k: int) -> list[Detection]:
        return self.frames.get(k, [])

    def total(self) -> int:
        return sum(len(v) for v in self.frames.values())


@dataclass
class GtBox:
    gt_id: int
    box: np.ndarray  # center form
    considered: bool = True
    visibility: float = 1.0


@dataclass
class GroundTruth:
    frames: dict[int, list[GtBox]] = field(default_factory=dict)

    @property
    def num_frames(self) -> int:
        return max(self.frames) if self.frames else 0

    def for_frame(self, k: int) -> list[GtBox]:
        return self.frames.get(k, [])


@dataclass
class SequenceInfo:
    width: float
    height: float
    num_frames: int
    frame_rate: float = 30.0


def read_detections(path: str) -> DetectionFrameSet:
    """Parse a det.txt file: `frame,-1,left,top,width,height,conf,...`.

    Malformed lines are skipped with a logged warning carrying the line
    number; a file with no parseable rows is an error.
    """
    rows: list[tuple[int, np.ndarray, float]] = []
    try:
        fh = open(path, "r", encoding="ascii")
    except OSError as exc:
        raise ValueError(f"cannot read detection file {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) < 7:
                    raise ValueError("fewer than 7 fields")
                frame = int(float(parts[0]))
                left, top, w, h = (float(v) for v in parts[2:6])
                score = float(parts[6])
                if frame < 1:
                    raise ValueError(f"frame index {frame} < 1")
                box = box_center_conversion((left, top, w, h))
            except ValueError as exc:
                log.warning("%s:%d: skipping malformed detection line (%s)", path, lineno, exc)
                continue
            rows.append((frame, box, score))
    if not rows:
        raise ValueError(f"no parseable detection rows in {path}")

    scores = np.array([r[2] for r in rows])
    if scores.min() < 0.0 or scores.max() > 1.0:
        span = scores.max() - scores.min()
        if span > 0:
            scores = (scores - scores.min()) / span
        else:
            scores = np.ones_like(scores)
    scores = np.clip(scores, 0.0, 1.0)

    out = DetectionFrameSet()
    for (frame, box, _), score in zip(rows, scores):
        out.frames.setdefault(frame, []).append(Detection(box=box, score=float(score)))
    out.frames = dict(sorted(out.frames.items()))
    return out


def read_ground_truth(path: str) -> GroundTruth:
    """Parse a gt.txt file: `frame,id,left,top,width,height,flag[,class,vis]`."""
    gt = GroundTruth()
    seen: set[tuple[int, int]] = set()
    try:
        fh = open(path, "r", encoding="ascii")
    except OSError as exc:
        raise ValueError(f"cannot read ground truth file {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) < 6:
                    raise ValueError("fewer than 6 fields")
                frame = int(float(parts[0]))
                gt_id = int(float(parts[1]))
                box = box_center_conversion(tuple(float(v) for v in parts[2:6]))
                considered = True if len(parts) < 7 else float(parts[6]) != 0.0
                visibility = 1.0 if len(parts) < 9 else float(parts[8])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed ground truth line ({exc})") from exc
            if (frame, gt_id) in seen:
                raise ValueError(f"{path}:{lineno}: duplicate (frame, id) pair ({frame}, {gt_id})")
            seen.add((frame, gt_id))
            gt.frames.setdefault(frame, []).append(
                GtBox(gt_id=gt_id, box=box, considered=considered, visibility=visibility))
    gt.frames = dict(sorted(gt.frames.items()))
    return gt


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy score-descending suppression at the given IoU threshold."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"nms threshold must be in (0, 1], got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, i))
    kept: list[Detection] = []
    for i in order:
        det = detections[i]
        if all(box_iou(det.box, k.box) < iou_threshold for k in kept):
            kept.append(det)
    return kept


def _fmt(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return s if s not in ("-0", "") else "0"


def write_results(results: list[FrameResult], path: str) -> None:
    """Write results as `frame,id,left,top,width,height,1,-1,-1,-1` rows."""
    lines = []
    for fr in sorted(results, key=lambda r: r.frame_index):
        for rb in sorted(fr.boxes, key=lambda b: b.track_id):
            left, top, w, h = box_top_left_conversion(rb.box)
            lines.append(
                f"{fr.frame_index},{rb.track_id},{_fmt(left)},{_fmt(top)},{_fmt(w)},{_fmt(h)},1,-1,-1,-1")
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines))
            if lines:
                fh.write("\n")
    except OSError as exc:
        raise ValueError(f"cannot write results to {path}: {exc}") from exc


def write_detections(det_set: DetectionFrameSet, path: str) -> None:
    """Write detections as `frame,-1,left,top,width,height,conf,-1,-1,-1` rows."""
    lines = []
    for frame in sorted(det_set.frames):
        for det in det_set.frames[frame]:
            left, top, w, h = box_top_left_conversion(det.box)
            lines.append(f"{frame},-1,{_fmt(left)},{_fmt(top)},{_fmt(w)},{_fmt(h)},{_fmt(det.score)},-1,-1,-1")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        if lines:
            fh.write("\n")


def write_ground_truth(gt: GroundTruth, path: str) -> None:
    """Write ground truth as `frame,id,left,top,width,height,1,1,1` rows."""
    lines = []
    for frame in sorted(gt.frames):
        for row in gt.frames[frame]:
            left, top, w, h = box_top_left_conversion(row.box)
            flag = 1 if row.considered else 0
            lines.append(f"{frame},{row.gt_id},{_fmt(left)},{_fmt(top)},{_fmt(w)},{_fmt(h)},{flag},1,{_fmt(row.visibility)}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        if lines:
            fh.write("\n")


def read_results(path: str) -> list[FrameResult]:
    """Read back a results file written by :func:`write_results`."""
    from .tracks import ResultBox

    per_frame: dict[int, FrameResult] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 6:
                raise ValueError(f"{path}:{lineno}: malformed results line")
            frame = int(float(parts[0]))
            track_id = int(float(parts[1]))
            box = box_center_conversion(tuple(float(v) for v in parts[2:6]))
            fr = per_frame.setdefault(frame, FrameResult(frame_index=frame))
            fr.boxes.append(ResultBox(track_id=track_id, box=box, origin="measured"))
    return [per_frame[k] for k in sorted(per_frame)]


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False,
                "yes": True, "no": False}


def read_config(path: str | None, missing_ok: bool = False) -> TrackerConfig:
    """Load a flat `key = value` config file keyed by parameter names.

    Unknown keys are rejected; missing keys keep their defaults.
    """
    config = default_config()
    if path is None:
        return config
    try:
        fh = open(path, "r", encoding="ascii")
    except OSError as exc:
        if missing_ok:
            return config
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    known = set(TrackerConfig.field_names())
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            current = getattr(config, key)
            try:
                if isinstance(current, bool):
                    if value.lower() not in _BOOL_VALUES:
                        raise ValueError(f"not a boolean: {value!r}")
                    parsed = _BOOL_VALUES[value.lower()]
                elif isinstance(current, int):
                    parsed = int(value)
                elif isinstance(current, float):
                    parsed = float(value)
                else:
                    parsed = value
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
            setattr(config, key, parsed)
    return config.validate()


def read_seqinfo(path: str) -> SequenceInfo:
    """Read a seqinfo.ini-style sequence descriptor."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"cannot read sequence info file {path}")
    if "Sequence" not in parser:
        raise ValueError(f"{path}: missing [Sequence] section")
    sec = parser["Sequence"]
    try:
        return SequenceInfo(
            width=float(sec["imWidth"]),
            height=float(sec["imHeight"]),
            num_frames=int(sec["seqLength"]),
            frame_rate=float(sec.get("frameRate", "30")),
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: bad sequence info ({exc})") from exc


def write_seqinfo(path: str, info: SequenceInfo, name: str = "synthetic") -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("[Sequence]\n")
        fh.write(f"name={name}\n")
        fh.write(f"frameRate={_fmt(info.frame_rate)}\n")
        fh.write(f"seqLength={info.num_frames}\n")
        fh.write(f"imWidth={_fmt(info.width)}\n")
        fh.write(f"imHeight={_fmt(info.height)}\n")


def read_ppm(path: str) -> np.ndarray:
    """Minimal binary PPM (P6, maxval 255) reader for synthetic frames."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P6"):
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos] in b" \t\r\n":
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in b" \t\r\n":
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    img = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    return img.reshape(height, width, 3).copy()


def write_ppm(path: str, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 image, got shape {img.shape}")
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
