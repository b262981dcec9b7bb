"""``geotrack`` command line: track, eval, sweep, simulate, bench.

Exit codes: 0 success, 1 usage error, 2 data error (missing or malformed files).
Every tracker setting is available as a flag of the same name (``--conf_object``
or ``--conf-object``), as ``GEOTRACK_<NAME>`` in the environment, or as a key
in the YAML file given with ``--config``.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from importlib import resources
from pathlib import Path

from . import runner
from .mot_io import MotFormatError
from .scenario import ScenarioSpec, generate
from .tracker import TrackerConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

log = logging.getLogger("geotrack")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which we reserve for data errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_tracker_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tracker settings")
    for f in dataclasses.fields(TrackerConfig):
        if f.name == "noise":
            continue
        flags = [f"--{f.name}"]
        if "_" in f.name:
            flags.append(f"--{f.name.replace('_', '-')}")
        # values are parsed later, together with config-file and environment values
        g.add_argument(*flags, dest=f.name, default=None,
                       metavar="BOOL" if isinstance(f.default, bool) else "X",
                       help=f"(default {f.default})")
    p.add_argument("--config", type=Path, help="YAML file with tracker settings")


def _tracker_config(args) -> tuple[TrackerConfig, dict]:
    file_values = runner.load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {f: getattr(args, f, None) for f in TrackerConfig.field_names()}
    return runner.build_tracker_config(file_values, overrides=overrides), file_values


def _run_config(args) -> runner.RunConfig:
    cfg, file_values = _tracker_config(args)
    inputs = list(args.inputs) or [Path(p) for p in file_values.get("inputs", [])]
    if not inputs:
        raise UsageError("no input sequences given")
    threads = args.threads if args.threads is not None else int(file_values.get("threads", 1))
    output = getattr(args, "output", None) or file_values.get("output")
    return runner.RunConfig(
        tracker=cfg,
        inputs=inputs,
        output=Path(output) if output else None,
        threads=threads,
        overlay=getattr(args, "overlay", None),
    )


def cmd_track(args) -> int:
    run = _run_config(args)
    runs = runner.run_track(run)
    total_frames = sum(r.frames for r in runs)
    core = sum(r.core_seconds for r in runs)
    wall = sum(r.wall_seconds for r in runs)
    for r in runs:
        print(f"{r.name}: frames={r.frames} core_seconds={r.core_seconds:.4f} "
              f"wall_seconds={r.wall_seconds:.4f} fps={r.fps:.1f}")
    fps = total_frames / core if core > 0 else float("inf")
    print(f"total: sequences={len(runs)} frames={total_frames} core_seconds={core:.4f} "
          f"wall_seconds={wall:.4f} fps={fps:.1f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    for p in (args.gt, args.results):
        if not Path(p).is_file():
            raise FileNotFoundError(f"{p}: no such file")
    report = runner.evaluate_files(args.gt, args.results, args.iou)
    print(runner.format_report(report), end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    run = _run_config(args)
    co = runner.parse_range(args.co_range)
    ct = runner.parse_range(args.ct_range)
    if not co or not ct:
        raise UsageError("sweep ranges must not be empty")
    rows = runner.run_sweep(run, co, ct, args.iou)
    text = runner.sweep_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    # keep stdout a clean CSV when the grid goes there
    summary_to = sys.stdout if args.csv else sys.stderr
    for key, (lo, hi) in runner.sweep_extremes(rows).items():
        print(f"{key}: min={lo:.6g} max={hi:.6g} spread={hi - lo:.6g}", file=summary_to)
    return EXIT_OK


def _load_spec(name_or_path: str) -> ScenarioSpec:
    path = Path(name_or_path)
    if path.is_file():
        return ScenarioSpec.load(path)
    bundled = resources.files("geotrack") / "data" / f"{name_or_path}.yaml"
    if bundled.is_file():
        with resources.as_file(bundled) as p:
            return ScenarioSpec.load(p)
    raise FileNotFoundError(f"{name_or_path}: no such scenario file or bundled scenario")


def cmd_simulate(args) -> int:
    spec = _load_spec(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    root = generate(spec).write(args.out_dir)
    print(f"wrote {root}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg, _ = _tracker_config(args)
    res = runner.run_bench(args.frames, args.detections, args.seed, cfg)
    for k, v in res.items():
        print(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geotrack", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="run the tracker over sequences")
    p.add_argument("inputs", nargs="*", type=Path, help="sequence directories or det files")
    p.add_argument("-o", "--output", type=Path, help="directory for result files")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--overlay", type=Path, help="directory for per-frame annotation CSVs")
    _add_tracker_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="CLEAR-MOT metrics of a result file")
    p.add_argument("gt", type=Path)
    p.add_argument("results", type=Path)
    p.add_argument("--iou", type=float, default=0.5, help="match gate (default 0.5)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over the two occlusion confidence thresholds")
    p.add_argument("inputs", nargs="*", type=Path)
    p.add_argument("--co-range", "--co_range", dest="co_range", required=True,
                   help="conf_object values: 'a,b,c' or 'start:stop:step'")
    p.add_argument("--ct-range", "--ct_range", dest="ct_range", required=True)
    p.add_argument("--csv", type=Path, help="write the grid here instead of stdout")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--threads", type=int, default=None)
    _add_tracker_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="write a synthetic sequence in MOT layout")
    p.add_argument("spec", help="scenario YAML path or bundled name (e.g. 'crossing')")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="tracker throughput on a synthetic crowd")
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--detections", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    _add_tracker_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"geotrack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError, MotFormatError, ValueError) as exc:
        print(f"geotrack: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
