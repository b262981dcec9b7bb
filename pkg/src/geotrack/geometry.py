"""Axis-aligned boxes and the overlap measures used for association.

Boxes are kept in corner form ``(left, top, right, bottom)``. Scalar helpers
operate on :class:`BoundingBox`; the ``*_matrix`` helpers take ``(N, 4)``
corner arrays and are what the tracker uses per frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, slots=True)
class BoundingBox:
    left: float
    top: float
    right: float
    bottom: float

    def __post_init__(self) -> None:
        if self.right < self.left or self.bottom < self.top:
            raise ValueError(f"negative box extent: {self!r}")

    @classmethod
    def from_ltwh(cls, left: float, top: float, width: float, height: float) -> "BoundingBox":
        return cls(left, top, left + width, top + height)

    @classmethod
    def from_center(cls, cx: float, cy: float, width: float, height: float) -> "BoundingBox":
        return cls(cx - width / 2.0, cy - height / 2.0, cx + width / 2.0, cy + height / 2.0)

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def height(self) -> float:
        return self.bottom - self.top

    @property
    def center(self) -> tuple[float, float]:
        return (self.left + self.right) / 2.0, (self.top + self.bottom) / 2.0

    @property
    def area(self) -> float:
        return self.width * self.height

    def to_ltwh(self) -> tuple[float, float, float, float]:
        return self.left, self.top, self.width, self.height

    def as_array(self) -> np.ndarray:
        return np.array([self.left, self.top, self.right, self.bottom], dtype=float)


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.right, b.right) - max(a.left, b.left)
    h = min(a.bottom, b.bottom) - max(a.top, b.top)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 when the union is empty (two degenerate boxes)."""
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def covered_percent(target: BoundingBox, other: BoundingBox) -> float:
    """Fraction of ``target``'s own area lying inside ``other``.

    Unlike IoU this normalizes by the first box only, so a small far-away
    target hidden behind a large near one scores close to 1.
    """
    area = target.area
    if area <= 0:
        raise ValueError("covered_percent needs a target with positive area")
    return intersection_area(target, other) / area


def extend_box(bb: BoundingBox, time_since_observed: int, rate: float) -> BoundingBox:
    """Grow ``bb`` about its center by ``1 + rate * time_since_observed`` per side."""
    if time_since_observed < 0 or rate < 0:
        raise ValueError("time_since_observed and rate must be non-negative")
    factor = 1.0 + rate * time_since_observed
    cx, cy = bb.center
    return BoundingBox.from_center(cx, cy, bb.width * factor, bb.height * factor)


def extended_iou(det: BoundingBox, target: BoundingBox, ext_target: BoundingBox) -> float:
    """IoU whose intersection uses the extended box but whose union keeps the
    target's original area."""
    inter = intersection_area(det, ext_target)
    denom = det.area + target.area - inter
    if denom <= 0:
        raise ValueError("extended_iou denominator is not positive")
    return inter / denom


# --- vectorized forms -------------------------------------------------------


def as_corners(boxes) -> np.ndarray:
    """Coerce a sequence of boxes (or an array) to a float ``(N, 4)`` array."""
    if isinstance(boxes, np.ndarray):
        return boxes.reshape(-1, 4).astype(float, copy=False)
    rows = [b.as_array() if isinstance(b, BoundingBox) else b for b in boxes]
    if not rows:
        return np.zeros((0, 4))
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def areas(boxes: np.ndarray) -> np.ndarray:
    return (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])


def intersection_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    h = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    return np.clip(w, 0.0, None) * np.clip(h, 0.0, None)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between the rows of ``a`` (N, 4) and ``b`` (M, 4)."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    inter = intersection_matrix(a, b)
    union = areas(a)[:, None] + areas(b)[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def covered_matrix(targets: np.ndarray, others: np.ndarray) -> np.ndarray:
    """``out[i, j]`` = fraction of ``targets[i]`` covered by ``others[j]``."""
    if len(targets) == 0 or len(others) == 0:
        return np.zeros((len(targets), len(others)))
    a = areas(targets)
    if np.any(a <= 0):
        raise ValueError("covered_percent needs targets with positive area")
    return intersection_matrix(targets, others) / a[:, None]


def extend_boxes(boxes: np.ndarray, time_since_observed: np.ndarray, rate: float) -> np.ndarray:
    factor = 1.0 + rate * np.asarray(time_since_observed, dtype=float)
    cx = (boxes[:, 0] + boxes[:, 2]) / 2.0
    cy = (boxes[:, 1] + boxes[:, 3]) / 2.0
    hw = (boxes[:, 2] - boxes[:, 0]) * factor / 2.0
    hh = (boxes[:, 3] - boxes[:, 1]) * factor / 2.0
    return np.stack([cx - hw, cy - hh, cx + hw, cy + hh], axis=1)


def extended_iou_matrix(dets: np.ndarray, targets: np.ndarray, ext_targets: np.ndarray) -> np.ndarray:
    """Pairwise extended IoU, detections along rows and targets along columns."""
    if len(dets) == 0 or len(targets) == 0:
        return np.zeros((len(dets), len(targets)))
    inter = intersection_matrix(dets, ext_targets)
    denom = areas(dets)[:, None] + areas(targets)[None, :] - inter
    if np.any(denom <= 0):
        raise ValueError("extended_iou denominator is not positive")
    return inter / denom
