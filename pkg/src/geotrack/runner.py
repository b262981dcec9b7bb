"""Sequence discovery and the track / eval / sweep / bench workflows behind the CLI."""

from __future__ import annotations

import dataclasses
import itertools
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .metrics import EvalReport, combine, evaluate, results_to_records
from .mot_io import (
    RecordMap,
    corners_by_frame,
    parse_detections,
    read_seqinfo,
    threshold_detections,
    write_results,
)
from .motion import NoiseConfig
from .scenario import crowd_spec, generate
from .tracker import FrameOutput, Tracker, TrackerConfig

ENV_PREFIX = "GEOTRACK_"


@dataclass
class SequenceSource:
    name: str
    det_path: Path
    gt_path: Path | None = None
    frame_count: int | None = None

    @classmethod
    def resolve(cls, path) -> "SequenceSource":
        """Accept a MOTChallenge sequence directory or a bare det file."""
        path = Path(path)
        if path.is_dir():
            det = path / "det" / "det.txt"
            if not det.is_file():
                raise FileNotFoundError(f"{det}: no detection file")
            gt = path / "gt" / "gt.txt"
            seqinfo = path / "seqinfo.ini"
            info = read_seqinfo(seqinfo) if seqinfo.is_file() else None
            return cls(
                name=info.name if info else path.name,
                det_path=det,
                gt_path=gt if gt.is_file() else None,
                frame_count=info.frame_count if info else None,
            )
        if path.is_file():
            return cls(name=path.stem, det_path=path)
        raise FileNotFoundError(f"{path}: no such sequence or detection file")


@dataclass
class RunConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    inputs: list[Path] = field(default_factory=list)
    output: Path | None = None
    threads: int = 1
    overlay: Path | None = None

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class SequenceRun:
    name: str
    frames: int
    core_seconds: float
    wall_seconds: float
    results: str
    outputs: list[FrameOutput] = field(repr=False, default_factory=list)

    @property
    def fps(self) -> float:
        return self.frames / self.core_seconds if self.core_seconds > 0 else float("inf")


def _coerce(name: str, raw: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if isinstance(raw, str):
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"{name}: expected a boolean, got {raw!r}")
        return bool(raw)
    value = float(raw)
    if isinstance(default, int) and value.is_integer():
        return int(value)
    return value


def build_tracker_config(file_values: dict | None = None, env: dict | None = None,
                         overrides: dict | None = None) -> TrackerConfig:
    """Merge defaults < config file < environment < explicit overrides."""
    base = {f.name: f.default for f in dataclasses.fields(TrackerConfig)
            if f.default is not dataclasses.MISSING}
    values: dict[str, Any] = {}
    file_values = dict(file_values or {})
    noise = file_values.pop("noise", None)
    unknown = set(file_values) - set(base) - {"output", "threads", "inputs", "overlay"}
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for name in base:
        if name in file_values:
            values[name] = _coerce(name, file_values[name], base[name])
    env = os.environ if env is None else env
    for name in base:
        key = ENV_PREFIX + name.upper()
        if key in env:
            values[name] = _coerce(name, env[key], base[name])
    for name, raw in (overrides or {}).items():
        if raw is not None:
            values[name] = _coerce(name, raw, base[name])
    if noise:
        values["noise"] = NoiseConfig(
            measurement_var=tuple(noise.get("measurement_var", NoiseConfig.measurement_var)),
            process_var=tuple(noise.get("process_var", NoiseConfig.process_var)),
            initial_velocity_var=float(noise.get("initial_velocity_var", NoiseConfig.initial_velocity_var)),
        )
    return TrackerConfig(**values)


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return data


def load_detections(source: SequenceSource, cfg: TrackerConfig) -> tuple[dict[int, np.ndarray], int]:
    records = threshold_detections(parse_detections(source.det_path), cfg.detection_score_threshold)
    frames = corners_by_frame(records)
    n = source.frame_count or max(frames, default=0)
    return frames, n


def track_frames(frames: dict[int, np.ndarray], n_frames: int,
                 cfg: TrackerConfig) -> tuple[list[FrameOutput], float]:
    """Run the tracker over frames ``1..n_frames``; returns outputs and core seconds."""
    tracker = Tracker(cfg)
    empty = np.zeros((0, 4))
    start = time.perf_counter()
    outputs = [tracker.step(f, frames.get(f, empty)) for f in range(1, n_frames + 1)]
    return outputs, time.perf_counter() - start


def track_sequence(source: SequenceSource, cfg: TrackerConfig) -> SequenceRun:
    wall = time.perf_counter()
    frames, n = load_detections(source, cfg)
    outputs, core = track_frames(frames, n, cfg)
    text = write_results(outputs)
    return SequenceRun(source.name, n, core, time.perf_counter() - wall, text, outputs)


def _map(fn, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, *zip(*items)))


def run_track(run: RunConfig) -> list[SequenceRun]:
    sources = [SequenceSource.resolve(p) for p in run.inputs]
    runs = _map(track_sequence, [(s, run.tracker) for s in sources], run.threads)
    if run.output is not None:
        out_dir = Path(run.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        for r in runs:
            (out_dir / f"{r.name}.txt").write_text(r.results, encoding="utf-8")
    if run.overlay is not None:
        ov = Path(run.overlay)
        ov.mkdir(parents=True, exist_ok=True)
        for r in runs:
            (ov / f"{r.name}.csv").write_text(overlay_csv(r.outputs), encoding="utf-8")
    return runs


def overlay_csv(outputs: Iterable[FrameOutput]) -> str:
    """Per-frame box annotations (active and occluded) for external plotting."""
    lines = ["frame,id,status,left,top,width,height"]
    for o in outputs:
        emitted = {tid for tid, _ in o.emitted}
        hidden = {tid for tid, _ in o.occluded}
        rows = [(tid, "occluded" if tid in hidden else "active", b) for tid, b in o.emitted]
        rows += [(tid, "occluded", b) for tid, b in o.occluded if tid not in emitted]
        for tid, status, b in sorted(rows, key=lambda r: r[0]):
            left, top, w, h = b.to_ltwh()
            lines.append(f"{o.frame},{tid},{status},{left:.2f},{top:.2f},{w:.2f},{h:.2f}")
    return "\n".join(lines) + "\n"


def evaluate_files(gt_path, results_path, iou_threshold: float = 0.5) -> EvalReport:
    gt = parse_detections(Path(gt_path))
    hyp = parse_detections(Path(results_path))
    return evaluate(gt, hyp, iou_threshold)


def format_report(report: EvalReport) -> str:
    """Aligned table followed by ``key=value`` lines."""
    s = report.summary()
    head = ["MOTA", "MOTP", "MT", "ML", "IDS", "FM", "FP", "FN"]
    vals = [
        f"{s['mota']:.3f}", f"{s['motp']:.3f}",
        f"{s['mt']} ({s['mt_fraction']:.1%})", f"{s['ml']} ({s['ml_fraction']:.1%})",
        str(s["ids"]), str(s["fm"]), str(s["fp"]), str(s["fn"]),
    ]
    widths = [max(len(h), len(v)) for h, v in zip(head, vals)]
    table = "  ".join(h.rjust(w) for h, w in zip(head, widths)) + "\n"
    table += "  ".join(v.rjust(w) for v, w in zip(vals, widths)) + "\n"
    kv = "".join(f"{k}={v:.6f}\n" if isinstance(v, float) else f"{k}={v}\n" for k, v in s.items())
    return table + "\n" + kv


# --- parameter sweep --------------------------------------------------------


@dataclass
class SweepRow:
    conf_object: float
    conf_target: float
    mota: float
    ids: int
    fm: int
    occluded_by_confidence: int
    occluded_by_coverage: int


def _sweep_point(frames_gt: list[tuple[dict, int, RecordMap]], cfg: TrackerConfig,
                 iou_threshold: float) -> SweepRow:
    reports = []
    by_conf = by_cover = 0
    for frames, n, gt in frames_gt:
        outputs, _ = track_frames(frames, n, cfg)
        by_conf += sum(o.diagnostics.occluded_by_confidence for o in outputs)
        by_cover += sum(o.diagnostics.occluded_by_coverage for o in outputs)
        reports.append(evaluate(gt, results_to_records(outputs), iou_threshold))
    total = combine(reports)
    return SweepRow(cfg.conf_object, cfg.conf_target, total.mota, total.ids, total.fm, by_conf, by_cover)


def run_sweep(run: RunConfig, co_range: Sequence[float], ct_range: Sequence[float],
              iou_threshold: float = 0.5) -> list[SweepRow]:
    if not co_range or not ct_range:
        raise ValueError("sweep ranges must not be empty")
    sources = [SequenceSource.resolve(p) for p in run.inputs]
    data = []
    for s in sources:
        if s.gt_path is None:
            raise FileNotFoundError(f"{s.name}: sweep needs ground truth (gt/gt.txt)")
        frames, n = load_detections(s, run.tracker)
        data.append((frames, n, parse_detections(s.gt_path)))
    points = []
    for co, ct in itertools.product(co_range, ct_range):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = dataclasses.replace(run.tracker, conf_object=float(co), conf_target=float(ct))
        points.append((data, cfg, iou_threshold))
    return _map(_sweep_point, points, run.threads)


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["conf_object,conf_target,mota,ids,fm,occluded_by_confidence,occluded_by_coverage"]
    for r in rows:
        lines.append(f"{r.conf_object:g},{r.conf_target:g},{r.mota:.6f},{r.ids},{r.fm},"
                     f"{r.occluded_by_confidence},{r.occluded_by_coverage}")
    return "\n".join(lines) + "\n"


def sweep_extremes(rows: Sequence[SweepRow]) -> dict[str, tuple[float, float]]:
    return {
        key: (min(getattr(r, key) for r in rows), max(getattr(r, key) for r in rows))
        for key in ("mota", "ids", "fm")
    }


def parse_range(text: str) -> list[float]:
    """``"0.5,0.6"`` or ``"start:stop:step"`` (stop inclusive) to a list of floats."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("range step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(max(n, 0))]
    return [float(x) for x in text.split(",") if x.strip()]


# --- benchmark --------------------------------------------------------------


def run_bench(frames: int = 1000, detections: int = 50, seed: int = 0,
              cfg: TrackerConfig | None = None) -> dict[str, float]:
    """Throughput on a synthetic crowd; detection generation is not timed."""
    scenario = generate(crowd_spec(seed, frame_count=frames, n_actors=detections))
    per_frame = corners_by_frame(scenario.detections)
    _, core = track_frames(per_frame, frames, cfg or TrackerConfig())
    return {
        "frames": frames,
        "detections_per_frame": sum(len(v) for v in per_frame.values()) / max(frames, 1),
        "core_seconds": core,
        "fps": frames / core if core > 0 else float("inf"),
    }
