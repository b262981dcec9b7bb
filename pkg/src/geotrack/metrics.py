"""CLEAR-MOT evaluation (MOTA, MOTP, IDS, FM, MT/ML) on frame-keyed records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .assignment import gated_assign
from .geometry import iou_matrix
from .mot_io import FrameRecord

MOSTLY_TRACKED = 0.8
MOSTLY_LOST = 0.2


@dataclass
class ObjectStats:
    frames: int = 0
    tracked: int = 0
    switches: int = 0
    fragmentations: int = 0

    @property
    def coverage(self) -> float:
        return self.tracked / self.frames if self.frames else 0.0


@dataclass
class EvalReport:
    mota: float
    motp: float
    ids: int
    fm: int
    fp: int
    fn: int
    mt: int
    ml: int
    gt_total: int
    trajectories: int
    matches: int = 0
    iou_sum: float = 0.0
    per_object: dict[int, ObjectStats] = field(default_factory=dict, repr=False)

    @property
    def mt_fraction(self) -> float:
        return self.mt / self.trajectories if self.trajectories else 0.0

    @property
    def ml_fraction(self) -> float:
        return self.ml / self.trajectories if self.trajectories else 0.0

    def summary(self) -> dict[str, float]:
        return {
            "mota": self.mota,
            "motp": self.motp,
            "mt": self.mt,
            "mt_fraction": self.mt_fraction,
            "ml": self.ml,
            "ml_fraction": self.ml_fraction,
            "ids": self.ids,
            "fm": self.fm,
            "fp": self.fp,
            "fn": self.fn,
            "gt_total": self.gt_total,
            "trajectories": self.trajectories,
        }


def _ratio(num: float, den: float, empty: float) -> float:
    return num / den if den else empty


def _records_arrays(recs: Sequence[FrameRecord]) -> tuple[np.ndarray, list[int]]:
    if not recs:
        return np.zeros((0, 4)), []
    return np.array([r.corners for r in recs], dtype=float), [r.id for r in recs]


def evaluate(
    ground_truth: Mapping[int, Sequence[FrameRecord]],
    hypotheses: Mapping[int, Sequence[FrameRecord]],
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Score ``hypotheses`` against ``ground_truth``.

    Ground-truth rows whose flag column (``score``) is 0 are not scored, and
    hypotheses overlapping such rows are dropped rather than counted as false
    positives. Fragmentations are counted between a trajectory's first and
    last tracked frame, so a trajectory that ends untracked adds none.
    """
    if not 0 < iou_threshold <= 1:
        raise ValueError(f"iou_threshold must lie in (0, 1], got {iou_threshold}")

    fp = fn = ids = 0
    n_matches = 0
    iou_sum = 0.0
    last_match: dict[int, int] = {}  # gt id -> hyp id of its latest correspondence
    history: dict[int, list[bool]] = {}
    switches: dict[int, int] = {}

    for frame in sorted(set(ground_truth) | set(hypotheses)):
        gt_rows = ground_truth.get(frame, ())
        active = [r for r in gt_rows if r.score != 0]
        ignored = [r for r in gt_rows if r.score == 0]
        gt_boxes, gt_ids = _records_arrays(active)
        hyp_boxes, hyp_ids = _records_arrays(list(hypotheses.get(frame, ())))
        if len(set(hyp_ids)) != len(hyp_ids):
            raise ValueError(f"frame {frame}: duplicate hypothesis ids")

        ious = iou_matrix(gt_boxes, hyp_boxes)
        pairs: list[tuple[int, int]] = []
        free_g = set(range(len(gt_ids)))
        free_h = set(range(len(hyp_ids)))

        # keep last frame's correspondences that are still valid
        hyp_index = {h: j for j, h in enumerate(hyp_ids)}
        for i, g in enumerate(gt_ids):
            j = hyp_index.get(last_match.get(g, -10**9))
            if j is not None and j in free_h and ious[i, j] >= iou_threshold:
                pairs.append((i, j))
                free_g.discard(i)
                free_h.discard(j)

        if free_g and free_h:
            rows, cols = sorted(free_g), sorted(free_h)
            sub = gated_assign(ious[np.ix_(rows, cols)], iou_threshold)
            for r, c in sub.matches:
                pairs.append((rows[r], cols[c]))
                free_g.discard(rows[r])
                free_h.discard(cols[c])

        if ignored and free_h:
            ig_boxes, _ = _records_arrays(ignored)
            cols = sorted(free_h)
            sub = gated_assign(iou_matrix(ig_boxes, hyp_boxes[cols]), iou_threshold)
            for _, c in sub.matches:
                free_h.discard(cols[c])

        tracked_now = set()
        for i, j in pairs:
            g, h = gt_ids[i], hyp_ids[j]
            prev = last_match.get(g)
            if prev is not None and prev != h:
                ids += 1
                switches[g] = switches.get(g, 0) + 1
            last_match[g] = h
            iou_sum += float(ious[i, j])
            tracked_now.add(g)
        n_matches += len(pairs)
        fp += len(free_h)
        fn += len(free_g)
        for g in gt_ids:
            history.setdefault(g, []).append(g in tracked_now)

    per_object = {}
    for g, seq in history.items():
        st = ObjectStats(frames=len(seq), tracked=sum(seq), switches=switches.get(g, 0))
        hits = [k for k, t in enumerate(seq) if t]
        if hits:
            span = seq[hits[0]:hits[-1] + 1]
            st.fragmentations = sum(1 for a, b in zip(span, span[1:]) if a and not b)
        per_object[g] = st

    gt_total = sum(st.frames for st in per_object.values())
    return EvalReport(
        mota=1.0 - _ratio(fn + fp + ids, gt_total, 0.0 if fp == 0 else float("inf")),
        motp=_ratio(iou_sum, n_matches, 0.0),
        ids=ids,
        fm=sum(st.fragmentations for st in per_object.values()),
        fp=fp,
        fn=fn,
        mt=sum(1 for st in per_object.values() if st.coverage >= MOSTLY_TRACKED),
        ml=sum(1 for st in per_object.values() if st.coverage <= MOSTLY_LOST),
        gt_total=gt_total,
        trajectories=len(per_object),
        matches=n_matches,
        iou_sum=iou_sum,
        per_object=per_object,
    )


def combine(reports: Iterable[EvalReport]) -> EvalReport:
    """Aggregate per-sequence reports the way benchmark totals are formed."""
    reports = list(reports)
    fp = sum(r.fp for r in reports)
    fn = sum(r.fn for r in reports)
    ids = sum(r.ids for r in reports)
    gt_total = sum(r.gt_total for r in reports)
    matches = sum(r.matches for r in reports)
    iou_sum = sum(r.iou_sum for r in reports)
    return EvalReport(
        mota=1.0 - _ratio(fn + fp + ids, gt_total, 0.0),
        motp=_ratio(iou_sum, matches, 0.0),
        ids=ids,
        fm=sum(r.fm for r in reports),
        fp=fp,
        fn=fn,
        mt=sum(r.mt for r in reports),
        ml=sum(r.ml for r in reports),
        gt_total=gt_total,
        trajectories=sum(r.trajectories for r in reports),
        matches=matches,
        iou_sum=iou_sum,
    )


def results_to_records(outputs) -> dict[int, list[FrameRecord]]:
    """Tracker outputs as hypothesis records, ready for :func:`evaluate`."""
    out: dict[int, list[FrameRecord]] = {}
    for o in outputs:
        if o.emitted:
            out[o.frame] = [FrameRecord(o.frame, tid, *box.to_ltwh()) for tid, box in o.emitted]
    return out
