import io

import pytest

from geotrack.geometry import BoundingBox
from geotrack.mot_io import (
    FrameRecord,
    MotFormatError,
    SequenceInfo,
    parse_detections,
    read_seqinfo,
    threshold_detections,
    write_records,
    write_results,
    write_seqinfo,
)
from geotrack.tracker import FrameOutput


def test_parse_minimal_row():
    recs = parse_detections("1,-1,10,20,30,40,0.9")
    (r,) = recs[1]
    assert (r.frame, r.left, r.top, r.width, r.height, r.score) == (1, 10, 20, 30, 40, 0.9)
    assert r.box == BoundingBox(10, 20, 40, 60)


def test_parse_empty():
    assert parse_detections("") == {}


def test_parse_rejects_negative_width():
    recs = parse_detections("1,-1,10,20,-5,40,0.9\n1,-1,10,20,5,40,0.9\n")
    assert recs.rejected == 1 and recs.total() == 1


@pytest.mark.parametrize("bad, line", [("1,-1,10,20,30\n", 1), ("1,-1,1,1,1,1,1\n2,-1,x,1,1,1,1\n", 2)])
def test_parse_errors_name_line(bad, line):
    with pytest.raises(MotFormatError, match=f"line {line}"):
        parse_detections(bad)


def test_parse_from_stream_and_path(tmp_path):
    text = "2,-1,1,2,3,4,0.5,-1,-1,-1\n1,-1,5,6,7,8,0.6,-1,-1,-1\n"
    p = tmp_path / "det.txt"
    p.write_text(text)
    assert parse_detections(p) == parse_detections(io.StringIO(text)) == parse_detections(text)


def test_threshold_examples():
    recs = [FrameRecord(1, -1, 0, 0, 1, 1, s) for s in (0.2, 0.3, 0.9)]
    assert [r.score for r in threshold_detections(recs, 0.3)] == [0.3, 0.9]
    assert len(threshold_detections(recs, 0.0)) == 3
    assert threshold_detections(recs, 1.1) == []


def test_write_results_format():
    out = FrameOutput(7, emitted=[(3, BoundingBox(0, 0, 10, 10))])
    assert write_results([out]) == "7,3,0.00,0.00,10.00,10.00,1,-1,-1,-1\n"
    assert write_results([]) == ""


def test_write_results_sorted():
    outs = [FrameOutput(2, emitted=[(5, BoundingBox(0, 0, 1, 1)), (1, BoundingBox(0, 0, 2, 2))]),
            FrameOutput(1, emitted=[(9, BoundingBox(0, 0, 3, 3))])]
    lines = write_results(outs).splitlines()
    assert [tuple(map(int, l.split(",")[:2])) for l in lines] == [(1, 9), (2, 1), (2, 5)]


def test_results_round_trip():
    outs = [FrameOutput(f, emitted=[(i, BoundingBox.from_ltwh(1.234 * f, 5.5 + i, 10.125, 20.0))
                                    for i in (1, 2)]) for f in (1, 2, 3)]
    text = write_results(outs)
    back = parse_detections(text)
    again = [FrameOutput(f, emitted=[(r.id, r.box) for r in recs]) for f, recs in back.items()]
    assert write_results(again) == text


def test_gt_records_round_trip():
    recs = [FrameRecord(1, 2, 10, 20, 30, 40, 0.0, 1.0, 0.25), FrameRecord(1, 1, 1, 2, 3, 4, 1.0, 1.0, 1.0)]
    text = write_records(recs, extra="gt")
    assert text.splitlines()[0] == "1,1,1.00,2.00,3.00,4.00,1,1,1.000"
    assert write_records(parse_detections(text).records(), extra="gt") == text


def test_seqinfo_round_trip(tmp_path):
    info = SequenceInfo("seq-a", 42, 25.0, 640, 480)
    write_seqinfo(info, tmp_path / "seqinfo.ini")
    assert read_seqinfo(tmp_path / "seqinfo.ini") == info


def test_seqinfo_missing_section(tmp_path):
    p = tmp_path / "seqinfo.ini"
    p.write_text("[Other]\nx=1\n")
    with pytest.raises(MotFormatError):
        read_seqinfo(p)
