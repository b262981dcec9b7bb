"""Constant-velocity Kalman filter over ``[u, v, s, r, du, dv, ds]``.

``u, v`` is the box center, ``s`` its area and ``r`` its aspect ratio
(width / height). The aspect ratio has no rate term, so it only moves on
measurement corrections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BoundingBox

# Lower bound on the area component; keeps long coasting tracks convertible to boxes.
AREA_FLOOR = 1.0

_F = np.eye(7)
_F[0, 4] = _F[1, 5] = _F[2, 6] = 1.0


@dataclass(frozen=True)
class NoiseConfig:
    measurement_var: tuple[float, float, float, float] = (1.0, 1.0, 10.0, 10.0)
    process_var: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 0.01)
    initial_velocity_var: float = 1000.0

    def __post_init__(self) -> None:
        if len(self.measurement_var) != 4 or len(self.process_var) != 7:
            raise ValueError("measurement_var needs 4 entries and process_var 7")
        if min(self.measurement_var) <= 0 or min(self.process_var) <= 0 or self.initial_velocity_var <= 0:
            raise ValueError("noise variances must be positive")
        object.__setattr__(self, "R", np.diag(np.asarray(self.measurement_var, dtype=float)))
        object.__setattr__(self, "Q", np.diag(np.asarray(self.process_var, dtype=float)))


DEFAULT_NOISE = NoiseConfig()


@dataclass
class MotionState:
    mean: np.ndarray
    covariance: np.ndarray = field(repr=False)

    @property
    def area_rate(self) -> float:
        return float(self.mean[6])

    def box(self) -> BoundingBox:
        return box_from_state(self)


def state_from_box(bb: BoundingBox) -> np.ndarray:
    """Measurement vector ``(u, v, s, r)`` for a box."""
    w, h = bb.width, bb.height
    if w <= 0 or h <= 0:
        raise ValueError(f"box must have positive width and height: {bb!r}")
    return np.array([bb.left + w / 2.0, bb.top + h / 2.0, w * h, w / h])


def box_from_state(m: MotionState | np.ndarray) -> BoundingBox:
    x = m.mean if isinstance(m, MotionState) else m
    u, v, s, r = float(x[0]), float(x[1]), float(x[2]), float(x[3])
    if not (s > 0 and r > 0):
        raise ValueError(f"state has non-positive area or aspect ratio: s={s}, r={r}")
    w = np.sqrt(s * r)
    h = s / w
    return BoundingBox(u - w / 2.0, v - h / 2.0, u + w / 2.0, v + h / 2.0)


def init_track_state(bb: BoundingBox, noise: NoiseConfig | None = None,
                     velocity: np.ndarray | None = None) -> MotionState:
    """Fresh state at ``bb``; velocity defaults to zero with inflated variance."""
    noise = noise or DEFAULT_NOISE
    mean = np.zeros(7)
    mean[:4] = state_from_box(bb)
    if velocity is not None:
        mean[4:] = velocity
    var = np.empty(7)
    var[:4] = noise.measurement_var
    # each rate inherits the process variance of the component it drives
    var[4:] = noise.initial_velocity_var * np.asarray(noise.process_var[:3])
    return MotionState(mean, np.diag(var))


def predict(m: MotionState, noise: NoiseConfig | None = None) -> MotionState:
    noise = noise or DEFAULT_NOISE
    mean = _F @ m.mean
    if mean[2] < AREA_FLOOR:
        mean[2] = AREA_FLOOR
    cov = _F @ m.covariance @ _F.T + noise.Q
    return MotionState(mean, cov)


def correct(m: MotionState, z: np.ndarray, noise: NoiseConfig | None = None) -> MotionState:
    """Measurement update observing ``(u, v, s, r)`` directly."""
    noise = noise or DEFAULT_NOISE
    z = np.asarray(z, dtype=float)
    if z.shape != (4,) or not np.all(np.isfinite(z)):
        raise ValueError(f"measurement must be 4 finite values, got {z!r}")
    P = m.covariance
    # H picks the first four components, so H P H^T and P H^T are slices.
    S = P[:4, :4] + noise.R
    PHt = P[:, :4]
    K = np.linalg.solve(S, PHt.T).T
    mean = m.mean + K @ (z - m.mean[:4])
    # Joseph form keeps the covariance symmetric PSD under rounding.
    I_KH = np.eye(7)
    I_KH[:, :4] -= K
    cov = I_KH @ P @ I_KH.T + K @ noise.R @ K.T
    cov = (cov + cov.T) / 2.0
    if mean[2] < AREA_FLOOR:
        mean[2] = AREA_FLOOR
    return MotionState(mean, cov)


def occluded_update(m: MotionState) -> MotionState:
    """Halve the area rate; nothing else changes."""
    mean = m.mean.copy()
    mean[6] = mean[6] / 2.0
    return MotionState(mean, m.covariance)


# --- batched forms used by the tracker's per-frame loop ----------------------


def predict_many(means: np.ndarray, covs: np.ndarray, noise: NoiseConfig | None = None):
    """:func:`predict` applied to stacked ``(n, 7)`` means and ``(n, 7, 7)`` covariances."""
    noise = noise or DEFAULT_NOISE
    means = means @ _F.T
    np.maximum(means[:, 2], AREA_FLOOR, out=means[:, 2])
    covs = _F @ covs @ _F.T + noise.Q
    return means, covs


def correct_many(means: np.ndarray, covs: np.ndarray, zs: np.ndarray,
                 noise: NoiseConfig | None = None):
    """:func:`correct` applied row-wise to stacked states and measurements."""
    noise = noise or DEFAULT_NOISE
    zs = np.asarray(zs, dtype=float)
    if zs.ndim != 2 or zs.shape[1] != 4 or not np.all(np.isfinite(zs)):
        raise ValueError("measurements must be an (n, 4) array of finite values")
    S = covs[:, :4, :4] + noise.R
    PHt = covs[:, :, :4]
    K = np.linalg.solve(S, PHt.transpose(0, 2, 1)).transpose(0, 2, 1)
    means = means + np.einsum("nij,nj->ni", K, zs - means[:, :4])
    I_KH = np.broadcast_to(np.eye(7), covs.shape).copy()
    I_KH[:, :, :4] -= K
    covs = I_KH @ covs @ I_KH.transpose(0, 2, 1) + K @ noise.R @ K.transpose(0, 2, 1)
    covs = (covs + covs.transpose(0, 2, 1)) / 2.0
    np.maximum(means[:, 2], AREA_FLOOR, out=means[:, 2])
    return means, covs
