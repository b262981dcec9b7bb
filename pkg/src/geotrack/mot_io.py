"""MOTChallenge text formats: det.txt / gt.txt rows, result files, seqinfo.ini."""

from __future__ import annotations

import configparser
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .geometry import BoundingBox

log = logging.getLogger(__name__)


class MotFormatError(ValueError):
    """A row or file that does not follow the MOTChallenge layout."""


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    id: int
    left: float
    top: float
    width: float
    height: float
    score: float = 1.0
    # det files carry world coordinates here; gt files carry class and visibility
    world_x: float = -1.0
    world_y: float = -1.0
    world_z: float = -1.0

    @property
    def box(self) -> BoundingBox:
        return BoundingBox.from_ltwh(self.left, self.top, self.width, self.height)

    @property
    def corners(self) -> tuple[float, float, float, float]:
        return self.left, self.top, self.left + self.width, self.top + self.height


class RecordMap(dict):
    """``frame -> [FrameRecord, ...]`` with the count of rows rejected while parsing."""

    rejected: int = 0

    def records(self) -> Iterable[FrameRecord]:
        for frame in sorted(self):
            yield from self[frame]

    def total(self) -> int:
        return sum(len(v) for v in self.values())


@dataclass(frozen=True)
class SequenceInfo:
    name: str
    frame_count: int
    frame_rate: float = 30.0
    image_width: int = 1920
    image_height: int = 1080

    def __post_init__(self) -> None:
        if self.frame_count < 1:
            raise ValueError("frame_count must be at least 1")


def _open_text(source) -> TextIO:
    if isinstance(source, Path):
        return open(source, encoding="utf-8")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_detections(source) -> RecordMap:
    """Parse MOT-style CSV rows into records grouped by frame.

    ``source`` is a :class:`~pathlib.Path`, an open text stream, or the
    file content as a string. Rows
    with non-positive width or height are skipped and counted in
    ``result.rejected``.
    """
    out = RecordMap()
    stream = _open_text(source)
    try:
        for lineno, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 7:
                raise MotFormatError(f"line {lineno}: expected at least 7 fields, got {len(parts)}")
            try:
                values = [float(p) for p in parts[:10]]
            except ValueError as exc:
                raise MotFormatError(f"line {lineno}: non-numeric field ({exc})") from None
            if not all(np.isfinite(values)):
                raise MotFormatError(f"line {lineno}: non-finite field")
            frame = int(values[0])
            if frame < 1 or frame != values[0]:
                raise MotFormatError(f"line {lineno}: frame must be a positive integer")
            if values[4] <= 0 or values[5] <= 0:
                out.rejected += 1
                continue
            values += [-1.0] * (10 - len(values))
            rec = FrameRecord(frame, int(values[1]), *values[2:10])
            out.setdefault(frame, []).append(rec)
    finally:
        if stream is not source:
            stream.close()
    if out.rejected:
        log.warning("skipped %d rows with non-positive width or height", out.rejected)
    return out


def threshold_detections(records, min_score: float):
    """Keep records scoring at least ``min_score``.

    Accepts either a flat iterable of records or a frame-keyed mapping, and
    returns the same shape.
    """
    if isinstance(records, dict):
        out = RecordMap()
        out.rejected = getattr(records, "rejected", 0)
        for frame, recs in records.items():
            kept = [r for r in recs if r.score >= min_score]
            if kept:
                out[frame] = kept
        return out
    return [r for r in records if r.score >= min_score]


def corners_by_frame(records: dict[int, list[FrameRecord]]) -> dict[int, np.ndarray]:
    return {f: np.array([r.corners for r in recs], dtype=float).reshape(-1, 4)
            for f, recs in records.items()}


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def format_result_row(frame: int, track_id: int, box: BoundingBox) -> str:
    left, top, w, h = box.to_ltwh()
    return f"{frame},{track_id},{_fmt(left)},{_fmt(top)},{_fmt(w)},{_fmt(h)},1,-1,-1,-1"


def write_results(outputs, stream: TextIO | None = None) -> str:
    """Render tracker outputs as a MOTChallenge submission, sorted by frame then id."""
    rows = []
    for out in sorted(outputs, key=lambda o: o.frame):
        for tid, box in sorted(out.emitted, key=lambda e: e[0]):
            if tid <= 0:
                raise ValueError(f"track ids must be positive, got {tid}")
            rows.append(format_result_row(out.frame, tid, box))
    text = "".join(r + "\n" for r in rows)
    if stream is not None:
        stream.write(text)
    return text


def write_records(records: Iterable[FrameRecord], stream: TextIO | None = None,
                  extra: str = "world") -> str:
    """Write generic records (gt or det files), sorted by frame then id.

    ``extra="gt"`` writes the 9-column gt layout (flag, class, visibility);
    the default writes the 10-column det layout.
    """
    lines = []
    for r in sorted(records, key=lambda r: (r.frame, r.id)):
        head = f"{r.frame},{r.id},{_fmt(r.left)},{_fmt(r.top)},{_fmt(r.width)},{_fmt(r.height)}"
        if extra == "gt":
            lines.append(f"{head},{int(r.score)},{int(r.world_x)},{r.world_y:.3f}\n")
        else:
            lines.append(f"{head},{r.score:.4f},{r.world_x:g},{r.world_y:g},{r.world_z:g}\n")
    text = "".join(lines)
    if stream is not None:
        stream.write(text)
    return text


def read_seqinfo(path) -> SequenceInfo:
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    if "Sequence" not in parser:
        raise MotFormatError(f"{path}: missing [Sequence] section")
    sec = parser["Sequence"]
    try:
        return SequenceInfo(
            name=sec.get("name", Path(path).parent.name),
            frame_count=int(sec["seqLength"]),
            frame_rate=float(sec.get("frameRate", 30)),
            image_width=int(sec.get("imWidth", 1920)),
            image_height=int(sec.get("imHeight", 1080)),
        )
    except (KeyError, ValueError) as exc:
        raise MotFormatError(f"{path}: bad seqinfo ({exc})") from None


def write_seqinfo(info: SequenceInfo, path) -> None:
    Path(path).write_text(
        "[Sequence]\n"
        f"name={info.name}\n"
        "imDir=img1\n"
        f"frameRate={info.frame_rate:g}\n"
        f"seqLength={info.frame_count}\n"
        f"imWidth={info.image_width}\n"
        f"imHeight={info.image_height}\n"
        "imExt=.jpg\n",
        encoding="utf-8",
    )
