"""GM-PHD recursion: measurement-driven birth, prediction, update with an
appearance-augmented likelihood, and mixture reduction (prune/merge/cap).

The update weight for component v against paired observation z = (z_d, z_w) is

    w_v(z) = p_d * w_v * q_v(z) / (c + p_d * sum_l w_l * q_l(z))

with q_v(z) = g(z_w | v) * N(z_d; H m_v, R + H P_v H^T) and clutter intensity
c = lambda_t / (frame area). Gaussian densities are evaluated in the log
domain to survive the small magnitudes of 4-dim innovations.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .core import (
    MEAS_DIM,
    Detection,
    FrameContext,
    GaussianComponent,
    Intensity,
    NumericalFailure,
    TrackerConfig,
    symmetrize,
)
from .motion import MotionModel, predict_state

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class Estimate:
    """A target state extracted from the reduced intensity.

    Carries the source component's covariance (needed to seed track coasting)
    and the score of the detection that produced the feature, so tracks can
    aggregate features weighted by detection confidence.
    """

    state: np.ndarray
    weight: float
    feature: np.ndarray | None
    source_component: int
    cov: np.ndarray
    confidence: float = 1.0

    @property
    def box(self) -> np.ndarray:
        return self.state[[0, 1, 4, 5]]


def birth_intensity(detections: list[Detection], config: TrackerConfig,
                    model: MotionModel) -> Intensity:
    """Spawn one component per sufficiently confident detection.

    Mean is the detection box with zero initial velocity; weight is w_gamma,
    additionally scaled by the detection score when use_score_in_birth is set.
    """
    comps = []
    for det in detections:
        if det.score < config.s_t:
            continue
        weight = config.w_gamma * det.score if config.use_score_in_birth else config.w_gamma
        mean = np.array([det.box[0], det.box[1], 0.0, 0.0, det.box[2], det.box[3]])
        comps.append(GaussianComponent(
            weight=weight,
            mean=mean,
            cov=model.P_birth.copy(),
            feature=det.feature,
            feature_conf=det.score,
            fresh=True,
        ))
    return Intensity(comps)


def predict(posterior: Intensity, births: Intensity, config: TrackerConfig,
            model: MotionModel) -> Intensity:
    """Survival-scaled prediction of the posterior plus the birth components."""
    comps = []
    for c in posterior:
        m, P = predict_state(c.mean, c.cov, model)
        comps.append(GaussianComponent(
            weight=config.p_s * c.weight,
            mean=m,
            cov=P,
            feature=c.feature,
            feature_conf=c.feature_conf,
            fresh=False,
        ))
    comps.extend(births.components)
    return Intensity(comps)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two nonzero feature vectors."""
    if a.shape != b.shape:
        raise ValueError(f"feature dimensions differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


def appearance_likelihood(a: np.ndarray, b: np.ndarray) -> float:
    """Map cosine similarity c into (0, 1) as exp(c) / (exp(c) + exp(-c)).

    Equals 0.5 for orthogonal vectors; the range is [0.1192, 0.8808].
    """
    c = cosine_similarity(a, b)
    return 1.0 / (1.0 + math.exp(-2.0 * c))


NEUTRAL_APPEARANCE = 0.5  # value of the likelihood at zero cosine similarity


def update(predicted: Intensity, detections: list[Detection], config: TrackerConfig,
           model: MotionModel, ctx: FrameContext) -> Intensity:
    """Measurement update of the predicted intensity.

    Output holds (1 + len(detections)) * len(predicted) components: the
    miss-detection copies scaled by (1 - p_d) followed by one Kalman-updated
    copy per (detection, component) pair. Updated components adopt the
    detection's feature; a component with no usable feature history (fresh
    birth or absent feature) contributes the neutral appearance value.
    """
    comps = predicted.components
    out: list[GaussianComponent] = []
    for c in comps:
        out.append(GaussianComponent(
            weight=(1.0 - config.p_d) * c.weight,
            mean=c.mean.copy(),
            cov=c.cov.copy(),
            feature=c.feature,
            feature_conf=c.feature_conf,
            fresh=False,
        ))
    if not detections or not comps:
        return Intensity(out)

    H, R = model.H, model.R
    n = len(comps)

    # per-component innovation statistics, shared across detections
    z_pred = np.empty((n, MEAS_DIM))
    gains = []
    covs_upd = []
    chols = []
    logdets = np.empty(n)
    for i, c in enumerate(comps):
        S = symmetrize(R + H @ c.cov @ H.T)
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise NumericalFailure(
                f"innovation covariance of component {i} is not positive definite")
        K = c.cov @ H.T @ np.linalg.inv(S)
        covs_upd.append(symmetrize((np.eye(6) - K @ H) @ c.cov))
        gains.append(K)
        chols.append(L)
        z_pred[i] = H @ c.mean
        logdets[i] = 2.0 * float(np.sum(np.log(np.diag(L))))

    clutter = config.lambda_t / ctx.area
    log_pd = math.log(config.p_d)
    log_w = np.log(np.maximum([c.weight for c in comps], 1e-300))

    for z in detections:
        log_q = np.empty(n)
        for i in range(n):
            innov = z.box - z_pred[i]
            y = np.linalg.solve(chols[i], innov)
            maha = float(y @ y)
            log_gauss = -0.5 * (maha + logdets[i] + MEAS_DIM * LOG_2PI)
            c = comps[i]
            if c.fresh or c.feature is None or z.feature is None:
                g = NEUTRAL_APPEARANCE
            else:
                g = appearance_likelihood(c.feature, z.feature)
            log_q[i] = math.log(g) + log_gauss

        log_num = log_pd + log_w + log_q
        m = float(np.max(log_num))
        total = float(np.exp(log_num - m).sum())
        if clutter > 0.0:
            log_denom = np.logaddexp(math.log(clutter), m + math.log(total))
        elif total > 0.0:
            log_denom = m + math.log(total)
        else:
            log_denom = math.inf  # no clutter and vanished likelihoods
        new_weights = np.exp(log_num - log_denom)

        for i in range(n):
            c = comps[i]
            innov = z.box - z_pred[i]
            out.append(GaussianComponent(
                weight=float(new_weights[i]),
                mean=c.mean + gains[i] @ innov,
                cov=covs_upd[i].copy(),
                feature=z.feature if z.feature is not None else c.feature,
                feature_conf=z.score if z.feature is not None else c.feature_conf,
                fresh=False,
            ))
    return Intensity(out)


def prune(intensity: Intensity, config: TrackerConfig) -> Intensity:
    """Drop components lighter than the pruning threshold, preserving order."""
    return Intensity([c for c in intensity if c.weight >= config.prune_t])


def merge(intensity: Intensity, config: TrackerConfig) -> Intensity:
    """Greedy moment-matched merging of nearby components.

    Repeatedly seeds a cluster with the heaviest unprocessed component and
    absorbs every component whose Mahalanobis distance to the seed, measured
    under the absorbed component's own covariance, is below merge_u. The
    merged covariance includes the spread of the absorbed means; the merged
    feature is the heaviest member's.
    """
    comps = intensity.components
    n = len(comps)
    if n <= 1:
        return Intensity(list(comps))

    means = np.array([c.mean for c in comps])
    inv_covs = [np.linalg.inv(c.cov) for c in comps]
    alive = list(range(n))
    out: list[GaussianComponent] = []
    while alive:
        seed = max(alive, key=lambda i: (comps[i].weight, -i))
        cluster = []
        for i in alive:
            d = means[i] - means[seed]
            dist = math.sqrt(max(float(d @ inv_covs[i] @ d), 0.0))
            if dist < config.merge_u:
                cluster.append(i)
        w = sum(comps[i].weight for i in cluster)
        if w <= 0.0:
            # weightless cluster: keep the seed untouched to preserve mass bookkeeping
            out.append(comps[seed])
            alive = [i for i in alive if i not in cluster]
            continue
        m = sum(comps[i].weight * means[i] for i in cluster) / w
        P = np.zeros((6, 6))
        for i in cluster:
            d = m - means[i]
            P += comps[i].weight * (comps[i].cov + np.outer(d, d))
        P = symmetrize(P / w)
        out.append(GaussianComponent(
            weight=w,
            mean=m,
            cov=P,
            feature=comps[seed].feature,
            feature_conf=comps[seed].feature_conf,
            fresh=comps[seed].fresh,
        ))
        alive = [i for i in alive if i not in cluster]
    return Intensity(out)


def cap(intensity: Intensity, v_prev: int, m_k: int, config: TrackerConfig,
        rng: np.random.Generator | None = None) -> Intensity:
    """Keep only the heaviest components.

    The retention limit is max(v_prev, m_k); in poisson mode a Poisson sample
    with mean v_prev (from the supplied generator) also enters the max.
    """
    limit = max(v_prev, m_k)
    if config.cap_mode == "poisson":
        if rng is None:
            raise ValueError("poisson cap mode requires a random generator")
        limit = max(limit, int(rng.poisson(v_prev)))
    if len(intensity) <= limit:
        return intensity
    order = sorted(range(len(intensity)), key=lambda i: (-intensity.components[i].weight, i))
    return Intensity([intensity.components[i] for i in order[:limit]])


def extract(intensity: Intensity, config: TrackerConfig) -> list[Estimate]:
    """Emit one estimate per component strictly heavier than the threshold."""
    estimates = []
    for i, c in enumerate(intensity):
        if c.weight > config.extract_threshold:
            estimates.append(Estimate(
                state=c.mean.copy(),
                weight=c.weight,
                feature=c.feature,
                source_component=i,
                cov=c.cov.copy(),
                confidence=c.feature_conf,
            ))
    return estimates
