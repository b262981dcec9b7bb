import numpy as np
import pytest

from geotrack.geometry import covered_percent
from geotrack.mot_io import write_records
from geotrack.scenario import (
    Actor,
    DetectorModel,
    ScenarioSpec,
    crossing_spec,
    generate,
    lanes_spec,
    street_spec,
)


def test_noiseless_detections_equal_ground_truth():
    sc = generate(lanes_spec(1, jitter=0.0))
    for f, recs in sc.ground_truth.items():
        gt_boxes = sorted(r.corners for r in recs)
        det_boxes = sorted(r.corners for r in sc.detections.get(f, []))
        assert np.allclose(gt_boxes, det_boxes)


def test_crossing_gap_matches_geometry():
    spec = crossing_spec()
    near, far = spec.actors
    threshold = spec.detector.occlusion_threshold
    # frames where the far actor is covered beyond the threshold by the near one
    expected = [f for f in range(1, spec.frame_count + 1)
                if covered_percent(far.box_at(f), near.box_at(f)) >= threshold]
    sc = generate(spec)
    detected = {f for f, recs in sc.detections.items()
                for r in recs if r.width == far.box[2]}
    missing = [f for f in range(1, spec.frame_count + 1) if f not in detected]
    assert missing == expected == sc.hidden[2]
    assert len(expected) == 5


def test_same_seed_same_bytes():
    a, b = generate(street_spec(9)), generate(street_spec(9))
    assert write_records(a.detections.records()) == write_records(b.detections.records())
    assert write_records(a.ground_truth.records(), extra="gt") == write_records(b.ground_truth.records(), extra="gt")
    c = generate(street_spec(10))
    assert write_records(c.detections.records()) != write_records(a.detections.records())


def test_adding_an_actor_keeps_other_noise():
    base = lanes_spec(2, n_actors=3)
    more = lanes_spec(2, n_actors=3)
    more.actors.append(Actor(1, 50, (10, 900, 30, 60), (1, 0)))
    a, b = generate(base), generate(more)
    for f, recs in a.detections.items():
        assert [r.corners for r in recs] == [r.corners for r in b.detections[f]][: len(recs)]


def test_suppression_never_adds_detections():
    sc = generate(street_spec(6, miss_prob=0.0))
    for f, recs in sc.ground_truth.items():
        assert len(sc.detections.get(f, [])) <= len(recs)
        assert all(r.width > 0 and r.height > 0 for r in recs)


def test_shrink_mode_reports_visible_part():
    spec = crossing_spec()
    spec.detector = DetectorModel(occlusion="shrink", occlusion_threshold=1.1)
    sc = generate(spec)
    narrow = [r for recs in sc.detections.values() for r in recs if r.width < 40]
    assert narrow


@pytest.mark.parametrize("bad", [
    dict(frame_count=0),
    dict(actors=[Actor(10, 5, (0, 0, 10, 10))]),
    dict(actors=[Actor(1, 5, (0, 0, 0, 10))]),
    dict(actors=[Actor(1, 500, (0, 0, 10, 10))]),
])
def test_invalid_spec_rejected(bad):
    fields = dict(seed=0, frame_count=60, actors=[Actor(1, 60, (0, 0, 10, 10))])
    fields.update(bad)
    with pytest.raises(ValueError):
        generate(ScenarioSpec(**fields))


def test_spec_dict_round_trip(tmp_path):
    spec = street_spec(3)
    again = ScenarioSpec.from_dict(spec.to_dict())
    assert write_records(generate(again).detections.records()) == write_records(generate(spec).detections.records())


def test_write_layout(tmp_path):
    root = generate(crossing_spec()).write(tmp_path)
    assert (root / "det" / "det.txt").is_file()
    assert (root / "gt" / "gt.txt").is_file()
    assert "seqLength=60" in (root / "seqinfo.ini").read_text()
