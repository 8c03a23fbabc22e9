"""Pluggable appearance-feature providers.

Three providers cover the use cases without any neural network in the loop:
null (no features, motion-only tracking), histogram (color histogram of the
detection crop, for synthetic pixel data), and file (precomputed embeddings,
the integration point for external feature extractors). Every emitted
feature is L2-normalized so cosine similarity is just a dot product.

Feature file format (text): a `#dim=D` header line, then one record per
detection: `frame,det_index,v1,...,vD`, ordered like the detection file.
"""
from __future__ import annotations

import numpy as np

from .core import Detection

DEFAULT_DIM = 512


class FeatureError(ValueError):
    """Missing or malformed feature data."""


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise FeatureError("cannot normalize a zero feature vector")
    return v / n


class NullProvider:
    """Yields no features; the tracker degrades to motion-only behavior."""

    kind = "null"

    def __init__(self, dimension: int = DEFAULT_DIM):
        self.dimension = dimension

    def features_for_frame(self, frame_index: int, frame_image,
                           detections: list[Detection]) -> list[None]:
        return [None] * len(detections)


class HistogramProvider:
    """RGB color histogram of each detection crop, flattened and normalized.

    With the default 8 bins per channel the embedding dimension is 512.
    """

    kind = "histogram"

    def __init__(self, bins: int = 8):
        self.bins = bins
        self.dimension = bins ** 3

    def features_for_frame(self, frame_index: int, frame_image: np.ndarray,
                           detections: list[Detection]) -> list[np.ndarray]:
        if frame_image is None:
            raise FeatureError("histogram provider needs pixel data for every frame")
        img = np.asarray(frame_image)
        if img.ndim != 3 or img.shape[2] != 3:
            raise FeatureError(f"expected an HxWx3 image, got shape {img.shape}")
        h_img, w_img = img.shape[:2]
        feats = []
        for det in detections:
            cx, cy, w, h = det.box
            x1 = int(np.clip(np.floor(cx - w / 2), 0, w_img - 1))
            x2 = int(np.clip(np.ceil(cx + w / 2), x1 + 1, w_img))
            y1 = int(np.clip(np.floor(cy - h / 2), 0, h_img - 1))
            y2 = int(np.clip(np.ceil(cy + h / 2), y1 + 1, h_img))
            crop = img[y1:y2, x1:x2].reshape(-1, 3)
            idx = (crop.astype(np.uint32) * self.bins) >> 8  # bin index per channel
            flat = (idx[:, 0] * self.bins + idx[:, 1]) * self.bins + idx[:, 2]
            hist = np.bincount(flat, minlength=self.dimension).astype(float)
            feats.append(_unit(hist))
        return feats


class FileProvider:
    """Precomputed per-detection feature vectors loaded from a text file."""

    kind = "file"

    def __init__(self, path: str):
        self.path = path
        self.dimension, self._table = _read_feature_file(path)

    def features_for_frame(self, frame_index: int, frame_image,
                           detections: list[Detection]) -> list[np.ndarray]:
        feats = []
        for i in range(len(detections)):
            key = (frame_index, i)
            if key not in self._table:
                raise FeatureError(
                    f"no feature record for frame {frame_index}, detection {i} in {self.path}")
            feats.append(self._table[key])
        return feats


def _read_feature_file(path: str) -> tuple[int, dict[tuple[int, int], np.ndarray]]:
    table: dict[tuple[int, int], np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#dim="):
                    dim = int(line[5:])
                continue
            if dim is None:
                raise FeatureError(f"{path}: missing '#dim=D' header before line {lineno}")
            parts = line.split(",")
            if len(parts) != dim + 2:
                raise FeatureError(
                    f"{path}:{lineno}: expected {dim + 2} fields, got {len(parts)}")
            frame = int(parts[0])
            det_index = int(parts[1])
            vec = np.array([float(v) for v in parts[2:]])
            table[(frame, det_index)] = _unit(vec)
    if dim is None:
        raise FeatureError(f"{path}: missing '#dim=D' header")
    return dim, table


def write_feature_file(path: str, dim: int,
                       records: list[tuple[int, int, np.ndarray]]) -> None:
    """Write `(frame, det_index, vector)` records in the provider file format."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_feature_file(dim, records))


def format_feature_file(dim: int, records: list[tuple[int, int, np.ndarray]]) -> str:
    lines = [f"#dim={dim}"]
    for frame, det_index, vec in records:
        if len(vec) != dim:
            raise FeatureError(
                f"record for frame {frame}, detection {det_index} has dimension "
                f"{len(vec)}, expected {dim}")
        values = ",".join(f"{v:.8f}" for v in vec)
        lines.append(f"{frame},{det_index},{values}")
    return "\n".join(lines) + "\n"


def make_provider(kind: str, feature_path: str | None = None) -> NullProvider | HistogramProvider | FileProvider:
    if kind == "null":
        return NullProvider()
    if kind == "histogram":
        return HistogramProvider()
    if kind == "file":
        if feature_path is None:
            raise FeatureError("file provider requires a feature file path")
        return FileProvider(feature_path)
    raise FeatureError(f"unknown provider kind {kind!r}")
