"""Per-frame tracking state machine.

Each call to :meth:`Tracker.step` runs one frame:

1. predict every track forward (ages advance here);
2. cascade association: plain IoU against all tracks, then re-identification
   of leftover tracks through uncertainty-extended boxes, then occlusion
   classification of whatever is still unmatched;
3. Kalman correction of matched tracks; occluded tracks only get their area
   rate halved;
4. target birth from unmatched detections chained over three frames, and
   removal of stale plain-unmatched tracks.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from . import geometry
from .assignment import gated_assign, two_step_match
from .geometry import BoundingBox
from .motion import (
    MotionState,
    NoiseConfig,
    box_from_state,
    correct_many,
    init_track_state,
    occluded_update,
    predict_many,
    state_from_box,
)


class TrackStatus(str, Enum):
    ACTIVE = "active"
    OCCLUDED = "occluded"


@dataclass
class TrackerConfig:
    alpha: float = 0.25
    conf_object: float = 0.75
    conf_target: float = 0.35
    min_coverage: float = 0.5
    iou_gate: float = 0.3
    k_min: float = 3
    k_max: float = 30
    c_k: float = 10.0
    min_hits: int = 3
    extension_rate: float = 0.3
    detection_score_threshold: float = 0.3
    require_reid_support: bool = True
    occlusion_resets_t_su: bool = True
    emit_occluded: bool = False
    area_fallback: float = 1.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self) -> None:
        if self.k_min > self.k_max:
            raise ValueError(f"k_min ({self.k_min}) must not exceed k_max ({self.k_max})")
        if self.c_k <= 0:
            raise ValueError("c_k must be positive")
        if self.extension_rate < 0:
            raise ValueError("extension_rate must be non-negative")
        if not (0 <= self.conf_target <= self.conf_object <= 1):
            warnings.warn(
                f"unusual confidence thresholds C_T={self.conf_target}, C_O={self.conf_object}",
                stacklevel=2,
            )

    @classmethod
    def field_names(cls) -> list[str]:
        return [f for f in cls.__dataclass_fields__ if f != "noise"]


@dataclass
class Track:
    id: int
    motion: MotionState
    age: int = 1
    time_since_observed: int = 0
    time_since_updated: int = 0
    status: TrackStatus = TrackStatus.ACTIVE
    hit_count: int = 1

    @property
    def box(self) -> BoundingBox:
        return box_from_state(self.motion)

    @property
    def area(self) -> float:
        return self.box.area


@dataclass
class FrameDiagnostics:
    matched: int = 0
    reidentified: int = 0
    occluded: int = 0
    occluded_by_confidence: int = 0
    occluded_by_coverage: int = 0
    unmatched_tracks: int = 0
    created: int = 0
    removed: int = 0
    unmatched_detections: int = 0
    live_tracks: int = 0


@dataclass
class FrameOutput:
    frame: int
    emitted: list[tuple[int, BoundingBox]] = field(default_factory=list)
    occluded: list[tuple[int, BoundingBox]] = field(default_factory=list)
    confidences: dict[int, float] = field(default_factory=dict)
    diagnostics: FrameDiagnostics = field(default_factory=FrameDiagnostics)


@dataclass
class Association:
    matches: list[tuple[int, int]]  # (track index, detection index)
    reidentified: list[tuple[int, int]]
    occluded: list[tuple[int, str]]  # (track index, "confidence" | "coverage")
    unmatched_tracks: list[int]
    unmatched_detections: list[int]
    confidences: dict[int, float]


def confidence(track: Track, avg_area: float, alpha: float = 1.0) -> float:
    """Track confidence from age, frames unobserved and relative size, clipped to 1."""
    if avg_area <= 0:
        raise ValueError("avg_area must be positive")
    t_so = max(track.time_since_observed, 1)
    return min(1.0, alpha * (track.age / t_so) * (track.area / avg_area))


def average_area(tracks: Sequence[Track], fallback: float = 1.0) -> float:
    if not tracks:
        return fallback
    return sum(t.area for t in tracks) / len(tracks)


def removal_threshold(age: float, k_min: float, k_max: float, c_k: float) -> float:
    return min(k_min + age / c_k, k_max)


def remove_targets(unmatched_tracks: Sequence[Track], cfg: TrackerConfig) -> list[Track]:
    """Plain-unmatched tracks whose filter has gone uncorrected for too long.

    Occluded tracks never qualify.
    """
    return [
        t for t in unmatched_tracks
        if t.status is not TrackStatus.OCCLUDED
        and t.time_since_updated > removal_threshold(t.age, cfg.k_min, cfg.k_max, cfg.c_k)
    ]


def _boxes_of(tracks: Sequence[Track]) -> np.ndarray:
    if not tracks:
        return np.zeros((0, 4))
    means = np.array([t.motion.mean[:4] for t in tracks])
    u, v, s, r = means.T
    w = np.sqrt(s * r)
    h = s / w
    return np.stack([u - w / 2, v - h / 2, u + w / 2, v + h / 2], axis=1)


def associate(
    tracks: Sequence[Track],
    detections: np.ndarray,
    avg_area: float,
    prev_unmatched: np.ndarray,
    cfg: TrackerConfig,
    track_boxes: np.ndarray | None = None,
) -> Association:
    """Match detections to (already predicted) tracks and classify the rest.

    ``detections`` and ``prev_unmatched`` are ``(N, 4)`` corner arrays.
    """
    dets = geometry.as_corners(detections)
    prev = geometry.as_corners(prev_unmatched)
    boxes = _boxes_of(tracks) if track_boxes is None else track_boxes

    # cascade step: plain IoU against every track, occluded ones included
    first = gated_assign(geometry.iou_matrix(dets, boxes), cfg.iou_gate)
    matches = [(t, d) for d, t in first.matches]
    free_tracks = first.unmatched_cols
    free_dets = first.unmatched_rows

    # re-identification through boxes grown with time unobserved
    reid: list[tuple[int, int]] = []
    if free_tracks and free_dets:
        cand = boxes[free_tracks]
        t_so = np.array([tracks[i].time_since_observed for i in free_tracks])
        ext = geometry.extend_boxes(cand, t_so, cfg.extension_rate)
        p_ext = geometry.extended_iou_matrix(dets[free_dets], cand, ext)
        if cfg.require_reid_support:
            p_d = geometry.iou_matrix(dets[free_dets], prev)
            pairs = [(c, b) for c, b, _ in two_step_match(p_ext, p_d, cfg.iou_gate)]
        else:
            pairs = gated_assign(p_ext, cfg.iou_gate).matches
        reid = [(free_tracks[b], free_dets[c]) for c, b in pairs]
        taken_t = {t for t, _ in reid}
        taken_d = {d for _, d in reid}
        free_tracks = [t for t in free_tracks if t not in taken_t]
        free_dets = [d for d in free_dets if d not in taken_d]
        matches.extend(reid)

    # occlusion: by an unseen object (confidence alone) or by another target
    occluded: list[tuple[int, str]] = []
    confs: dict[int, float] = {}
    unmatched: list[int] = []
    if free_tracks:
        cover = geometry.covered_matrix(boxes[free_tracks], boxes)
        for row, i in enumerate(free_tracks):
            cover[row, i] = 0.0  # a track does not cover itself
        max_cover = cover.max(axis=1) if len(tracks) > 1 else np.zeros(len(free_tracks))
        for row, i in enumerate(free_tracks):
            c = confidence(tracks[i], avg_area, cfg.alpha)
            confs[i] = c
            if c > cfg.conf_object:
                occluded.append((i, "confidence"))
            elif c > cfg.conf_target and max_cover[row] > cfg.min_coverage:
                occluded.append((i, "coverage"))
            else:
                unmatched.append(i)

    return Association(
        matches=sorted(matches),
        reidentified=sorted(reid),
        occluded=occluded,
        unmatched_tracks=unmatched,
        unmatched_detections=sorted(free_dets),
        confidences=confs,
    )


def _chain_velocity(newest: np.ndarray, oldest: np.ndarray, gap: int) -> np.ndarray:
    vel = (state_from_box(_bb(newest))[:3] - state_from_box(_bb(oldest))[:3]) / gap
    if not np.all(np.isfinite(vel)):
        return np.zeros(3)
    return vel


def _measurements(boxes: np.ndarray) -> np.ndarray:
    w = boxes[:, 2] - boxes[:, 0]
    h = boxes[:, 3] - boxes[:, 1]
    return np.stack([boxes[:, 0] + w / 2, boxes[:, 1] + h / 2, w * h, w / h], axis=1)


def _bb(row: np.ndarray) -> BoundingBox:
    return BoundingBox(float(row[0]), float(row[1]), float(row[2]), float(row[3]))


def find_new_targets(
    unmatched_now: np.ndarray,
    unmatched_prev: np.ndarray,
    unmatched_prev2: np.ndarray,
    cfg: TrackerConfig,
    ids: Iterator[int],
) -> tuple[list[Track], list[int], list[int]]:
    """Spawn tracks from detections chained across three consecutive frames.

    Returns the new tracks plus the indices consumed from the current and the
    previous pool.
    """
    now = geometry.as_corners(unmatched_now)
    prev = geometry.as_corners(unmatched_prev)
    prev2 = geometry.as_corners(unmatched_prev2)
    if len(now) == 0 or len(prev) == 0 or len(prev2) == 0:
        return [], [], []
    # the previous frame's pool is the element both IoU problems share
    chains = two_step_match(
        geometry.iou_matrix(prev, now), geometry.iou_matrix(prev, prev2), cfg.iou_gate
    )
    chains.sort(key=lambda ch: ch[1])
    tracks = []
    for p, n, p2 in chains:
        state = init_track_state(_bb(now[n]), cfg.noise, _chain_velocity(now[n], prev2[p2], 2))
        tracks.append(Track(id=next(ids), motion=state))
    return tracks, [n for _, n, _ in chains], [p for p, _, _ in chains]


class Tracker:
    """Online tracker; feed frames in increasing order through :meth:`step`."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.tracks: list[Track] = []
        self.frame_count = 0
        self.last_frame: int | None = None
        self._ids = itertools.count(1)
        self._pool_prev = np.zeros((0, 4))
        self._pool_prev2 = np.zeros((0, 4))

    def step(self, frame: int, detections, scores: Sequence[float] | None = None) -> FrameOutput:
        """Process one frame of detections.

        ``detections`` is a sequence of :class:`BoundingBox` or an ``(N, 4)``
        corner array. When ``scores`` is given, detections scoring below the
        configured threshold are dropped first.
        """
        cfg = self.config
        noise = cfg.noise
        if self.last_frame is not None and frame <= self.last_frame:
            raise ValueError(f"frame {frame} is not after frame {self.last_frame}")
        self.last_frame = frame
        self.frame_count += 1

        dets = geometry.as_corners(detections)
        if scores is not None:
            keep = np.asarray(scores, dtype=float) >= cfg.detection_score_threshold
            dets = dets[keep]
        if len(dets) and np.any((dets[:, 2] <= dets[:, 0]) | (dets[:, 3] <= dets[:, 1])):
            raise ValueError("detections must have positive width and height")

        if self.tracks:
            means, covs = predict_many(
                np.array([t.motion.mean for t in self.tracks]),
                np.array([t.motion.covariance for t in self.tracks]),
                noise,
            )
            for t, m, c in zip(self.tracks, means, covs):
                t.motion = MotionState(m, c)
                t.age += 1
        tracks = self.tracks
        boxes = _boxes_of(tracks)
        avg = float(geometry.areas(boxes).mean()) if len(tracks) else cfg.area_fallback

        assoc = associate(tracks, dets, avg, self._pool_prev, cfg, track_boxes=boxes)
        out = FrameOutput(frame)
        diag = out.diagnostics
        out.confidences = {tracks[i].id: c for i, c in assoc.confidences.items()}

        if assoc.matches:
            t_idx = [ti for ti, _ in assoc.matches]
            means, covs = correct_many(
                np.array([tracks[ti].motion.mean for ti in t_idx]),
                np.array([tracks[ti].motion.covariance for ti in t_idx]),
                _measurements(dets[[di for _, di in assoc.matches]]),
                noise,
            )
            for ti, m, c in zip(t_idx, means, covs):
                tracks[ti].motion = MotionState(m, c)
        for ti, _ in assoc.matches:
            t = tracks[ti]
            t.time_since_observed = 0
            t.time_since_updated = 0
            t.status = TrackStatus.ACTIVE
            t.hit_count += 1
        for ti, branch in assoc.occluded:
            t = tracks[ti]
            t.motion = occluded_update(t.motion)
            t.time_since_observed += 1
            if cfg.occlusion_resets_t_su:
                t.time_since_updated = 0
            t.status = TrackStatus.OCCLUDED
            if branch == "confidence":
                diag.occluded_by_confidence += 1
            else:
                diag.occluded_by_coverage += 1
        plain = [tracks[i] for i in assoc.unmatched_tracks]
        for t in plain:
            t.time_since_observed += 1
            t.time_since_updated += 1
            t.status = TrackStatus.ACTIVE

        pool = dets[assoc.unmatched_detections]
        if self.frame_count <= cfg.min_hits:
            born = [Track(id=next(self._ids), motion=init_track_state(_bb(row), noise)) for row in pool]
            pool = pool[:0]
            prev_pool = self._pool_prev
        else:
            born, used_now, used_prev = find_new_targets(
                pool, self._pool_prev, self._pool_prev2, cfg, self._ids
            )
            pool = np.delete(pool, used_now, axis=0)
            prev_pool = np.delete(self._pool_prev, used_prev, axis=0)

        removed = remove_targets(plain, cfg)
        removed_ids = {t.id for t in removed}
        matched_ids = {tracks[ti].id for ti, _ in assoc.matches}

        for t in tracks:
            if t.id in matched_ids:
                out.emitted.append((t.id, t.box))
            elif t.status is TrackStatus.OCCLUDED:
                out.occluded.append((t.id, t.box))
        for t in born:
            out.emitted.append((t.id, t.box))
        if cfg.emit_occluded:
            out.emitted.extend(out.occluded)
        out.emitted.sort(key=lambda e: e[0])

        self.tracks = [t for t in tracks if t.id not in removed_ids] + born
        self._pool_prev2 = prev_pool
        self._pool_prev = pool

        diag.matched = len(assoc.matches)
        diag.reidentified = len(assoc.reidentified)
        diag.occluded = len(assoc.occluded)
        diag.unmatched_tracks = len(assoc.unmatched_tracks)
        diag.created = len(born)
        diag.removed = len(removed)
        diag.unmatched_detections = len(pool)
        diag.live_tracks = len(self.tracks)
        return out


def run_sequence(frames: dict[int, np.ndarray], config: TrackerConfig | None = None,
                 frame_range: Sequence[int] | None = None) -> list[FrameOutput]:
    """Run a fresh tracker over ``frames`` (frame index → ``(N, 4)`` corners).

    Frames missing from the mapping are processed as empty.
    """
    tracker = Tracker(config)
    if frame_range is None:
        frame_range = range(1, max(frames, default=0) + 1)
    empty = np.zeros((0, 4))
    return [tracker.step(f, frames.get(f, empty)) for f in frame_range]
