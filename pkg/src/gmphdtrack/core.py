"""Shared domain types: configuration, detections, Gaussian mixture components.

State vectors are 6-dim numpy arrays [cx, cy, vx, vy, w, h] (center-based box
plus velocity); measurement vectors are 4-dim [cx, cy, w, h]. Boxes are kept
center-based everywhere inside the tracker; top-left form appears only at
file I/O boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
import numpy as np

STATE_DIM = 6
MEAS_DIM = 4

# state vector component indices
IX_CX, IX_CY, IX_VX, IX_VY, IX_W, IX_H = range(STATE_DIM)


class ConfigError(ValueError):
    """Raised for out-of-range or unknown configuration values."""


class NumericalFailure(RuntimeError):
    """Raised when a covariance stops being usable (non positive definite)."""


@dataclass
class TrackerConfig:
    """Tracker parameters. Defaults are the reference operating point.

    eta           weight balancing distance vs appearance cost in association
    s_t           detection score threshold gating birth
    w_gamma       initial weight of a birth component
    sigma_r       measurement noise std (pixels)
    sigma_v       process noise std (pixels/frame^2)
    p_d           probability of detection
    p_s           probability of survival
    lambda_t      mean clutter (false positive) count per frame
    merge_u       Mahalanobis distance threshold for merging components
    prune_t       weight threshold below which components are pruned
    t_ts          max consecutive coasting predictions before a track is killed
    c_ts          association cost threshold (matches at or above are dropped)
    v_s_ts        visual similarity threshold for re-identification
    extract_threshold  component weight must exceed this to emit an estimate
    delta         sampling period in frame units
    """

    eta: float = 0.65
    s_t: float = 0.0
    w_gamma: float = 0.1
    sigma_r: float = 6.0
    sigma_v: float = 5.0
    p_d: float = 0.95
    p_s: float = 0.99
    lambda_t: float = 10.0
    merge_u: float = 4.0
    prune_t: float = 1e-5
    t_ts: int = 3
    c_ts: float = 0.4
    v_s_ts: float = 0.6
    extract_threshold: float = 0.5
    delta: float = 1.0
    use_score_in_birth: bool = False
    use_iou_cost: bool = False
    cap_mode: str = "deterministic"
    reid_pool_max: int = 0  # 0 = keep all dead tracks
    rng_seed: int = 0

    def validate(self) -> "TrackerConfig":
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must be in [0, 1], got {self.eta}")
        if not 0.0 < self.p_d <= 1.0:
            raise ConfigError(f"p_d must be in (0, 1], got {self.p_d}")
        if not 0.0 < self.p_s <= 1.0:
            raise ConfigError(f"p_s must be in (0, 1], got {self.p_s}")
        if self.sigma_r <= 0:
            raise ConfigError(f"sigma_r must be positive, got {self.sigma_r}")
        if self.sigma_v <= 0:
            raise ConfigError(f"sigma_v must be positive, got {self.sigma_v}")
        if self.lambda_t < 0:
            raise ConfigError(f"lambda_t must be >= 0, got {self.lambda_t}")
        if self.w_gamma <= 0:
            raise ConfigError(f"w_gamma must be positive, got {self.w_gamma}")
        if self.merge_u <= 0:
            raise ConfigError(f"merge_u must be positive, got {self.merge_u}")
        if self.prune_t < 0:
            raise ConfigError(f"prune_t must be >= 0, got {self.prune_t}")
        if self.t_ts < 0:
            raise ConfigError(f"t_ts must be >= 0, got {self.t_ts}")
        if self.c_ts <= 0:
            raise ConfigError(f"c_ts must be positive, got {self.c_ts}")
        if self.delta <= 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.cap_mode not in ("deterministic", "poisson"):
            raise ConfigError(f"cap_mode must be 'deterministic' or 'poisson', got {self.cap_mode!r}")
        if self.reid_pool_max < 0:
            raise ConfigError(f"reid_pool_max must be >= 0, got {self.reid_pool_max}")
        return self

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def default_config() -> TrackerConfig:
    """Configuration with every parameter at its default value."""
    return TrackerConfig().validate()


@dataclass
class FrameContext:
    """Frame geometry used for distance normalization and clutter density."""

    frame_index: int
    width: float
    height: float

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class Detection:
    """One detector output: center-form box [cx, cy, w, h], score, optional feature."""

    box: np.ndarray
    score: float
    feature: np.ndarray | None = None

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float)
        if self.box.shape != (MEAS_DIM,):
            raise ValueError(f"detection box must have shape ({MEAS_DIM},), got {self.box.shape}")


@dataclass
class GaussianComponent:
    """One weighted Gaussian term of the intensity.

    `feature` is the appearance vector of the last detection that updated the
    component (or that birthed it); `feature_conf` is that detection's score.
    `fresh` marks a component born in the current frame: its carried feature
    has no history yet, so the update treats its appearance as neutral.
    """

    weight: float
    mean: np.ndarray
    cov: np.ndarray
    feature: np.ndarray | None = None
    feature_conf: float = 1.0
    fresh: bool = False

    def validate(self, tol: float = 1e-9) -> "GaussianComponent":
        if self.weight < 0:
            raise ValueError(f"component weight must be >= 0, got {self.weight}")
        if self.mean.shape != (STATE_DIM,):
            raise ValueError(f"mean must have shape ({STATE_DIM},)")
        if self.cov.shape != (STATE_DIM, STATE_DIM):
            raise ValueError(f"cov must have shape ({STATE_DIM}, {STATE_DIM})")
        if not np.all(np.isfinite(self.mean)) or not np.all(np.isfinite(self.cov)):
            raise ValueError("component has non-finite entries")
        if np.max(np.abs(self.cov - self.cov.T)) > tol:
            raise ValueError("covariance is not symmetric")
        if np.min(np.linalg.eigvalsh(self.cov)) <= 0:
            raise ValueError("covariance is not positive definite")
        return self


@dataclass
class Intensity:
    """Ordered Gaussian mixture; total weight approximates expected target count."""

    components: list[GaussianComponent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def total_mass(self) -> float:
        return float(sum(c.weight for c in self.components))


def symmetrize(P: np.ndarray) -> np.ndarray:
    """Force exact symmetry; applied after every update/merge step."""
    return 0.5 * (P + P.T)


def make_state(cx: float, cy: float, vx: float, vy: float, w: float, h: float) -> np.ndarray:
    return np.array([cx, cy, vx, vy, w, h], dtype=float)


def box_center_conversion(top_left_box) -> np.ndarray:
    """Convert a [left, top, w, h] box to center form [cx, cy, w, h]."""
    left, top, w, h = (float(v) for v in top_left_box)
    if w <= 0 or h <= 0:
        raise ValueError(f"box width and height must be positive, got w={w}, h={h}")
    return np.array([left + w / 2.0, top + h / 2.0, w, h], dtype=float)


def box_top_left_conversion(center_box) -> np.ndarray:
    """Inverse of :func:`box_center_conversion`."""
    cx, cy, w, h = (float(v) for v in center_box)
    if w <= 0 or h <= 0:
        raise ValueError(f"box width and height must be positive, got w={w}, h={h}")
    return np.array([cx - w / 2.0, cy - h / 2.0, w, h], dtype=float)
