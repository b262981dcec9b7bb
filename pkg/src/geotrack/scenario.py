"""Deterministic synthetic sequences: linear ground truth plus a degraded detector.

Actors move with constant per-frame velocity. The detector jitters box edges,
drops boxes at random, and hides actors that sit behind a nearer one (larger
box area means closer to the camera). Ground-truth rows of actors hidden this
way are written with the "not considered" flag, the same convention the
benchmark uses for unscoreable boxes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .geometry import BoundingBox, covered_percent, intersection_area
from .mot_io import FrameRecord, RecordMap, SequenceInfo, write_records, write_seqinfo

OCCLUSION_MODES = ("none", "suppress", "shrink")


@dataclass
class Actor:
    entry: int
    exit: int
    box: tuple[float, float, float, float]  # left, top, width, height at the entry frame
    velocity: tuple[float, float] = (0.0, 0.0)

    def box_at(self, frame: int) -> BoundingBox:
        dt = frame - self.entry
        left, top, w, h = self.box
        return BoundingBox.from_ltwh(left + self.velocity[0] * dt, top + self.velocity[1] * dt, w, h)

    def present(self, frame: int) -> bool:
        return self.entry <= frame <= self.exit


@dataclass
class DetectorModel:
    miss_prob: float = 0.0
    jitter: float = 0.0
    score_range: tuple[float, float] = (0.5, 1.0)
    occlusion: str = "suppress"
    # an actor covered by at least this fraction of a nearer one is not detected
    occlusion_threshold: float = 0.7


@dataclass
class ScenarioSpec:
    seed: int
    frame_count: int
    actors: list[Actor]
    detector: DetectorModel = field(default_factory=DetectorModel)
    name: str = "synthetic"
    image_size: tuple[int, int] = (1920, 1080)

    def validate(self) -> None:
        if self.frame_count < 1:
            raise ValueError("frame_count must be at least 1")
        det = self.detector
        if det.occlusion not in OCCLUSION_MODES:
            raise ValueError(f"unknown occlusion mode {det.occlusion!r}")
        if not 0 <= det.miss_prob <= 1 or det.jitter < 0:
            raise ValueError("miss_prob must lie in [0, 1] and jitter must be non-negative")
        lo, hi = det.score_range
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"bad score_range {det.score_range}")
        for i, a in enumerate(self.actors):
            if not (1 <= a.entry < a.exit <= self.frame_count):
                raise ValueError(f"actor {i}: need 1 <= entry < exit <= frame_count")
            if a.box[2] <= 0 or a.box[3] <= 0:
                raise ValueError(f"actor {i}: box must have positive size")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        try:
            actors = [
                Actor(int(a["entry"]), int(a["exit"]), tuple(map(float, a["box"])),
                      tuple(map(float, a.get("velocity", (0.0, 0.0)))))
                for a in data["actors"]
            ]
            det = dict(data.get("detector") or {})
            if "score_range" in det:
                det["score_range"] = tuple(det["score_range"])
            spec = cls(
                seed=int(data["seed"]),
                frame_count=int(data["frame_count"]),
                actors=actors,
                detector=DetectorModel(**det),
                name=str(data.get("name", "synthetic")),
                image_size=tuple(data.get("image_size", (1920, 1080))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"invalid scenario spec: {exc}") from None
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> "ScenarioSpec":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: scenario spec must be a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Scenario:
    spec: ScenarioSpec
    ground_truth: RecordMap
    detections: RecordMap
    # frames in which each actor (by gt id) was hidden by the occlusion rule
    hidden: dict[int, list[int]]

    @property
    def info(self) -> SequenceInfo:
        w, h = self.spec.image_size
        return SequenceInfo(self.spec.name, self.spec.frame_count, 30.0, int(w), int(h))

    def write(self, out_dir) -> Path:
        """Write a MOTChallenge-style sequence directory and return its path."""
        root = Path(out_dir) / self.spec.name
        (root / "det").mkdir(parents=True, exist_ok=True)
        (root / "gt").mkdir(parents=True, exist_ok=True)
        (root / "gt" / "gt.txt").write_text(
            write_records(self.ground_truth.records(), extra="gt"), encoding="utf-8")
        (root / "det" / "det.txt").write_text(
            write_records(self.detections.records()), encoding="utf-8")
        write_seqinfo(self.info, root / "seqinfo.ini")
        return root


def actor_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per actor, so adding actors leaves the others' noise intact."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def visible_remainder(target: BoundingBox, occluder: BoundingBox) -> BoundingBox | None:
    """Largest strip of ``target`` lying outside ``occluder``, or None if fully hidden."""
    if intersection_area(target, occluder) == 0:
        return target
    candidates = []
    if occluder.left > target.left:
        candidates.append(BoundingBox(target.left, target.top, min(occluder.left, target.right), target.bottom))
    if occluder.right < target.right:
        candidates.append(BoundingBox(max(occluder.right, target.left), target.top, target.right, target.bottom))
    if occluder.top > target.top:
        candidates.append(BoundingBox(target.left, target.top, target.right, min(occluder.top, target.bottom)))
    if occluder.bottom < target.bottom:
        candidates.append(BoundingBox(target.left, max(occluder.bottom, target.top), target.right, target.bottom))
    candidates = [c for c in candidates if c.area > 0]
    if not candidates:
        return None
    return max(candidates, key=lambda c: c.area)


def occluder_of(index: int, boxes: dict[int, BoundingBox]) -> tuple[float, int | None]:
    """Highest coverage of actor ``index`` by any nearer (strictly larger) actor."""
    mine = boxes[index]
    best, who = 0.0, None
    for j, other in boxes.items():
        if j == index or other.area <= mine.area:
            continue
        c = covered_percent(mine, other)
        if c > best:
            best, who = c, j
    return best, who


def generate(spec: ScenarioSpec) -> Scenario:
    spec.validate()
    det_model = spec.detector
    rngs = [actor_rng(spec.seed, i) for i in range(len(spec.actors))]
    gt, dets = RecordMap(), RecordMap()
    hidden: dict[int, list[int]] = {}
    lo, hi = det_model.score_range

    for frame in range(1, spec.frame_count + 1):
        boxes = {i: a.box_at(frame) for i, a in enumerate(spec.actors) if a.present(frame)}
        for i, box in boxes.items():
            # draw every variate each frame so streams stay aligned whatever happens
            rng = rngs[i]
            miss = rng.random() < det_model.miss_prob
            noise = rng.normal(0.0, det_model.jitter, 4) if det_model.jitter > 0 else np.zeros(4)
            score = float(rng.uniform(lo, hi))

            coverage, occluder = (0.0, None)
            if det_model.occlusion != "none":
                coverage, occluder = occluder_of(i, boxes)
            is_hidden = occluder is not None and coverage >= det_model.occlusion_threshold
            gt_id = i + 1
            gt.setdefault(frame, []).append(FrameRecord(
                frame, gt_id, box.left, box.top, box.width, box.height,
                0.0 if is_hidden else 1.0, 1.0, round(1.0 - coverage, 3)))
            if is_hidden:
                hidden.setdefault(gt_id, []).append(frame)
                continue
            if miss:
                continue
            seen = box
            if det_model.occlusion == "shrink" and occluder is not None:
                seen = visible_remainder(box, boxes[occluder])
                if seen is None:
                    continue
            left, top = seen.left + noise[0], seen.top + noise[1]
            right, bottom = seen.right + noise[2], seen.bottom + noise[3]
            if right - left <= 1 or bottom - top <= 1:
                continue
            dets.setdefault(frame, []).append(FrameRecord(
                frame, -1, left, top, right - left, bottom - top, score))
    return Scenario(spec, gt, dets, hidden)


def crossing_spec(seed: int = 0, jitter: float = 0.0) -> ScenarioSpec:
    """Two pedestrians crossing; the far one is hidden for five frames mid-sequence."""
    return ScenarioSpec(
        seed=seed,
        frame_count=60,
        name="crossing",
        actors=[
            # near walker, moving right
            Actor(1, 60, (100.0, 100.0, 56.0, 200.0), (4.0, 0.0)),
            # far walker, moving left behind it
            Actor(1, 60, (340.0, 130.0, 40.0, 100.0), (-4.0, 0.0)),
        ],
        detector=DetectorModel(jitter=jitter, occlusion="suppress", occlusion_threshold=0.7),
    )


def lanes_spec(seed: int, frame_count: int = 120, n_actors: int = 6,
               miss_prob: float = 0.0, jitter: float = 1.0) -> ScenarioSpec:
    """Actors in separate horizontal lanes entering and leaving at random frames.

    Lanes never overlap, so every birth and death is unambiguous.
    """
    rng = np.random.default_rng(seed)
    actors = []
    for i in range(n_actors):
        entry = int(rng.integers(1, frame_count // 2))
        exit_ = int(rng.integers(entry + 15, frame_count + 1)) if entry + 15 <= frame_count else frame_count
        w = float(rng.uniform(30, 60))
        h = w * float(rng.uniform(1.8, 2.6))
        top = 20.0 + i * 180.0
        left = float(rng.uniform(50, 600))
        vx = float(rng.uniform(-3, 3))
        actors.append(Actor(entry, exit_, (left, top, w, h), (vx, 0.0)))
    return ScenarioSpec(
        seed=seed, frame_count=frame_count, actors=actors, name=f"lanes-{seed}",
        detector=DetectorModel(miss_prob=miss_prob, jitter=jitter, occlusion="none"),
        image_size=(1920, 20 + n_actors * 180),
    )


def crowd_spec(seed: int, frame_count: int = 1000, n_actors: int = 50) -> ScenarioSpec:
    """A dense grid of walkers present for the whole sequence (throughput workload)."""
    rng = np.random.default_rng(seed)
    cols = int(np.ceil(np.sqrt(n_actors)))
    actors = []
    for i in range(n_actors):
        r, c = divmod(i, cols)
        w = float(rng.uniform(30, 50))
        actors.append(Actor(
            1, frame_count,
            (100.0 + c * 180.0, 50.0 + r * 220.0, w, w * 2.2),
            (float(rng.uniform(-0.1, 0.1)), float(rng.uniform(-0.1, 0.1))),
        ))
    return ScenarioSpec(
        seed=seed, frame_count=frame_count, actors=actors, name=f"crowd-{seed}",
        detector=DetectorModel(jitter=1.0, occlusion="none"),
        image_size=(100 + cols * 180, 50 + cols * 220),
    )


def street_spec(seed: int, frame_count: int = 200, n_actors: int = 12,
                miss_prob: float = 0.05, jitter: float = 1.0) -> ScenarioSpec:
    """Walkers crossing a street at mixed depths, so they pass behind each other.

    Box size grows with the lane's distance down the image, as it would under
    a perspective camera.
    """
    rng = np.random.default_rng(seed)
    width, height = 1280, 720
    actors = []
    for _ in range(n_actors):
        depth = float(rng.uniform(0.0, 1.0))
        h = 80.0 + 160.0 * depth
        w = h * float(rng.uniform(0.38, 0.45))
        top = 200.0 + 220.0 * depth - h / 2 + float(rng.normal(0, 10))
        speed = float(rng.uniform(2.0, 6.0)) * (1 if rng.random() < 0.5 else -1)
        entry = int(rng.integers(1, max(2, frame_count - 60)))
        span = int(min(frame_count - entry, (width + w) / abs(speed)))
        exit_ = entry + max(span, 1)
        left = -w / 2 if speed > 0 else width - w / 2
        actors.append(Actor(entry, min(exit_, frame_count), (left, top, w, h), (speed, 0.0)))
    return ScenarioSpec(
        seed=seed, frame_count=frame_count, actors=actors, name=f"street-{seed}",
        detector=DetectorModel(miss_prob=miss_prob, jitter=jitter, occlusion="suppress"),
        image_size=(width, height),
    )
