import csv
import io

import pytest

from geotrack import runner
from geotrack.cli import main
from geotrack.metrics import evaluate
from geotrack.mot_io import parse_detections, write_records
from geotrack.scenario import generate, street_spec
from fixtures import one_swap, single_gt


@pytest.fixture
def sequences(tmp_path):
    root = tmp_path / "data"
    for seed in (1, 2):
        generate(street_spec(seed, frame_count=120)).write(root)
    return sorted(root.iterdir())


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line and " " not in line)


def test_simulate_bundled_crossing(tmp_path, capsys):
    assert main(["simulate", "crossing", str(tmp_path)]) == 0
    det = parse_detections(tmp_path / "crossing" / "det" / "det.txt")
    counts = [len(det.get(f, [])) for f in range(1, 61)]
    assert counts.count(1) == 5 and counts.count(2) == 55


def test_simulate_same_seed_same_files(tmp_path):
    main(["simulate", "crossing", str(tmp_path / "a"), "--seed", "4"])
    main(["simulate", "crossing", str(tmp_path / "b"), "--seed", "4"])
    for rel in ("det/det.txt", "gt/gt.txt"):
        assert (tmp_path / "a/crossing" / rel).read_bytes() == (tmp_path / "b/crossing" / rel).read_bytes()


def test_simulate_malformed_spec(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("seed: 0\nframe_count: 10\nactors:\n  - {entry: 5, exit: 2, box: [0, 0, 1, 1]}\n")
    assert main(["simulate", str(bad), str(tmp_path / "out")]) != 0
    assert main(["simulate", str(tmp_path / "nope.yaml"), str(tmp_path / "out")]) != 0


def test_track_then_eval(sequences, tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["track", *map(str, sequences), "-o", str(out)]) == 0
    summary = capsys.readouterr().out
    assert "fps=" in summary and "total: sequences=2" in summary
    seq = sequences[0]
    assert main(["eval", str(seq / "gt" / "gt.txt"), str(out / f"{seq.name}.txt")]) == 0
    report = kv(capsys.readouterr().out)
    assert 0.0 < float(report["mota"]) <= 1.0


def test_threads_do_not_change_outputs(sequences, tmp_path):
    main(["track", *map(str, sequences), "-o", str(tmp_path / "one"), "--threads", "1"])
    main(["track", *map(str, sequences), "-o", str(tmp_path / "two"), "--threads", "2"])
    for seq in sequences:
        name = f"{seq.name}.txt"
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_eval_of_gt_against_itself(sequences, capsys):
    gt = str(sequences[0] / "gt" / "gt.txt")
    assert main(["eval", gt, gt]) == 0
    assert "1.000" in capsys.readouterr().out


def test_eval_reports_swap_count(tmp_path, capsys):
    gt, hyp = tmp_path / "gt.txt", tmp_path / "hyp.txt"
    gt.write_text(write_records([r for v in single_gt().values() for r in v], extra="gt"))
    hyp.write_text(write_records([r for v in one_swap().values() for r in v]))
    assert main(["eval", str(gt), str(hyp)]) == 0
    expected = evaluate(parse_detections(gt), parse_detections(hyp))
    assert int(kv(capsys.readouterr().out)["ids"]) == expected.ids == 1


def test_eval_missing_file(tmp_path):
    assert main(["eval", str(tmp_path / "gt.txt"), str(tmp_path / "res.txt")]) == 2


def test_eval_malformed_file(tmp_path):
    bad = tmp_path / "gt.txt"
    bad.write_text("1,2,3\n")
    assert main(["eval", str(bad), str(bad)]) == 2


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["track", "--no-such-flag"])
    assert exc.value.code == 1
    assert main(["track"]) == 1


def test_sweep_single_point_matches_track_and_eval(sequences, tmp_path, capsys):
    seq = sequences[0]
    grid = tmp_path / "grid.csv"
    assert main(["sweep", str(seq), "--co-range", "0.7", "--ct-range", "0.3", "--csv", str(grid)]) == 0
    (row,) = list(csv.DictReader(io.StringIO(grid.read_text())))
    main(["track", str(seq), "-o", str(tmp_path / "res"), "--conf-object", "0.7", "--conf_target", "0.3"])
    capsys.readouterr()
    main(["eval", str(seq / "gt" / "gt.txt"), str(tmp_path / "res" / f"{seq.name}.txt")])
    report = kv(capsys.readouterr().out)
    assert float(row["mota"]) == pytest.approx(float(report["mota"]), abs=1e-6)
    assert int(row["ids"]) == int(report["ids"]) and int(row["fm"]) == int(report["fm"])


def test_sweep_grid_shape_and_monotone_occlusions(sequences, tmp_path, capsys):
    assert main(["sweep", *map(str, sequences), "--co-range", "0.5:1.0:0.1", "--ct-range", "0.2,0.35"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 6 * 2
    for ct in ("0.2", "0.35"):
        counts = [int(r["occluded_by_confidence"]) for r in rows if r["conf_target"] == ct]
        assert counts == sorted(counts, reverse=True)


def test_sweep_empty_range(sequences):
    assert main(["sweep", str(sequences[0]), "--co-range", "", "--ct-range", "0.3"]) == 1


def test_bench_reports_fps(capsys):
    assert main(["bench", "--frames", "50", "--detections", "10"]) == 0
    assert float(kv(capsys.readouterr().out)["fps"]) > 0


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "cfg.yaml"
    cfg_file.write_text("conf_object: 0.6\nk_max: 12\nnoise:\n  initial_velocity_var: 50\n")
    values = runner.load_config_file(cfg_file)
    cfg = runner.build_tracker_config(values, env={"GEOTRACK_K_MAX": "20"}, overrides={"conf_object": "0.9"})
    assert (cfg.conf_object, cfg.k_max, cfg.noise.initial_velocity_var) == (0.9, 20, 50)
    with pytest.raises(ValueError):
        runner.build_tracker_config({"no_such_field": 1}, env={})


def test_overlay_written(sequences, tmp_path):
    main(["track", str(sequences[0]), "-o", str(tmp_path / "r"), "--overlay", str(tmp_path / "ov")])
    header = (tmp_path / "ov" / f"{sequences[0].name}.csv").read_text().splitlines()[0]
    assert header == "frame,id,status,left,top,width,height"
