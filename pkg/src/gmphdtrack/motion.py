"""Linear-Gaussian system matrices for the constant-velocity box model."""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .core import STATE_DIM, TrackerConfig, ConfigError, symmetrize

BIRTH_COV_DIAG = (100.0, 100.0, 25.0, 25.0, 20.0, 20.0)


@dataclass
class MotionModel:
    """Time-invariant matrices: built once per run, shared by all components."""

    F: np.ndarray  # 6x6 state transition
    Q: np.ndarray  # 6x6 process noise covariance
    H: np.ndarray  # 4x6 observation matrix
    R: np.ndarray  # 4x4 observation noise covariance
    P_birth: np.ndarray  # 6x6 birth covariance


def build_model(config: TrackerConfig) -> MotionModel:
    """Assemble F, Q, H, R and the birth covariance from the configuration."""
    if config.sigma_r <= 0 or config.sigma_v <= 0:
        raise ConfigError("sigma_r and sigma_v must be positive")
    d = config.delta
    I2 = np.eye(2)
    Z2 = np.zeros((2, 2))

    F = np.block([
        [I2, d * I2, Z2],
        [Z2, I2, Z2],
        [Z2, Z2, I2],
    ])
    Q = config.sigma_v ** 2 * np.block([
        [(d ** 4 / 4.0) * I2, (d ** 3 / 2.0) * I2, Z2],
        [(d ** 3 / 2.0) * I2, (d ** 2) * I2, Z2],
        [Z2, Z2, I2],
    ])
    H = np.block([
        [I2, Z2, Z2],
        [Z2, Z2, I2],
    ])
    R = config.sigma_r ** 2 * np.eye(4)
    P_birth = np.diag(BIRTH_COV_DIAG)
    return MotionModel(F=F, Q=Q, H=H, R=R, P_birth=P_birth)


def predict_state(m: np.ndarray, P: np.ndarray, model: MotionModel) -> tuple[np.ndarray, np.ndarray]:
    """One-step prediction: returns (F m, Q + F P F^T), re-symmetrized."""
    m_pred = model.F @ m
    P_pred = symmetrize(model.Q + model.F @ P @ model.F.T)
    return m_pred, P_pred
