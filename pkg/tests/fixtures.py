"""Hand-counted evaluator fixtures: one ground-truth object over frames 1-10."""

from geotrack.mot_io import FrameRecord

FRAMES = range(1, 11)


def _rec(frame, tid, left=10.0):
    return FrameRecord(frame, tid, left + frame, 20.0, 30.0, 60.0)


def single_gt():
    return {f: [_rec(f, 1)] for f in FRAMES}


def perfect():
    return {f: [_rec(f, 7)] for f in FRAMES}


def one_swap():
    # hypothesis id changes once, at frame 6
    return {f: [_rec(f, 7 if f <= 5 else 8)] for f in FRAMES}


def one_gap():
    return {f: [_rec(f, 7)] for f in FRAMES if f not in (5, 6)}
