import json

import numpy as np
import pytest

from gridfuse.cli import main
from gridfuse.grid import ObservationMap, parse_map, serialize_map


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_plan_text(capsys):
    code, out, _ = run(capsys, "plan", "--p", "0.9", "--qprime", "0.9", "--d", "0.99")
    assert code == 0
    assert "N(d)=14" in out and "[0.296612, 0.310163]" in out


def test_plan_lines_pattern_json(capsys):
    code, out, _ = run(capsys, "plan", "--p", "0.9", "--pattern", "lines", "--d", "0.99", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["n_required"] == 10 and abs(doc["q_prime"] - 0.9625) < 1e-12
    assert doc["c_low"] <= doc["c_chosen"] <= doc["c_high"]


@pytest.mark.parametrize("argv", [
    ["plan", "--p", "0.9", "--qprime", "0.05", "--d", "0.9"],
    ["plan", "--p", "0.9", "--qprime", "0.9", "--d", "0.4"],
    ["plan", "--p", "0.9", "--qprime", "0.9", "--d", "0.99", "--n", "5"],
    ["plan", "--p", "0.9", "--d", "0.99"],
    ["degrade", "--p", "0.5", "--qprime", "0.4", "--n", "3"],
    ["simulate", "--p", "0.4", "--qprime", "0.5", "--d", "0.9", "--pattern", "empty"],
    ["calibrate-q", "--p", "0.9", "--pattern", "lines", "--nh", "square5"],
])
def test_parameter_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_p_plus_q_message(capsys):
    _, _, err = run(capsys, "plan", "--p", "0.9", "--qprime", "0.05", "--d", "0.9")
    assert "p+q' must exceed 1" in err


@pytest.mark.parametrize("argv", [
    ["plan", "--p", "99%", "--qprime", "0.9", "--d", "0.99"],
    ["simulate", "--rounds", "0", "--p", "0.9", "--d", "0.9"],
    ["degrade", "--p", "0.9", "--qprime", "1.2", "--n", "3"],
])
def test_usage_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_degrade(capsys):
    code, out, _ = run(capsys, "degrade", "--p", "0.9", "--qprime", "0.9", "--n", "5", "--json")
    doc = json.loads(out)
    assert code == 0 and abs(doc["c"] - 0.3) < 1e-9 and abs(doc["d_prime"] - 0.92135) < 1e-5
    _, out, _ = run(capsys, "degrade", "--p", "0.9", "--qprime", "0.9", "--n", "1")
    assert "d'=0.736455" in out
    _, out, _ = run(capsys, "degrade", "--p", "0.9", "--qprime", "0.9", "--n", "14", "--json")
    assert json.loads(out)["d_prime"] >= 0.99


def test_calibrate_q(capsys, tmp_path):
    assert run(capsys, "calibrate-q", "--p", "0.9", "--pattern", "none")[1].strip() == "q'=0.9"
    assert run(capsys, "calibrate-q", "--p", "0.9", "--pattern", "lines")[1].strip() == "q'=0.9625"
    single = tmp_path / "single_obstacle.txt"
    single.write_text("000\n010\n000\n")
    assert run(capsys, "calibrate-q", "--p", "0.9", "--map", str(single))[1].strip() == "q'=0.9875"


def _write_maps(tmp_path, grids):
    paths = []
    for i, g in enumerate(grids):
        path = tmp_path / f"obs{i}.txt"
        path.write_text(serialize_map(ObservationMap(np.array(g))))
        paths.append(str(path))
    return paths


def test_fuse_unanimous(capsys, tmp_path):
    grid = [[1, 0, 0], [0, 1, 1]]
    paths = _write_maps(tmp_path, [grid] * 5)
    out_path = tmp_path / "fused.txt"
    pgm = tmp_path / "fused.pgm"
    code, out, _ = run(capsys, "fuse", *paths, "--c", "0.5", "--out", str(out_path), "--pgm", str(pgm))
    assert code == 0
    assert parse_map(out_path.read_text()).cells.tolist() == grid
    assert "5/5: 3 cells" in out
    assert pgm.read_text().startswith("P2\n3 2\n255\n")


def test_fuse_threshold_and_ml(capsys, tmp_path):
    # cell (0,0) is 1 in 2 of 5 maps, cell (0,1) in 3 of 5
    grids = [[[1, 1]], [[1, 1]], [[0, 1]], [[0, 0]], [[0, 0]]]
    paths = _write_maps(tmp_path, grids)
    code, out, _ = run(capsys, "fuse", *paths, "--c", "0.3")
    assert code == 0 and out == "11\n"
    code, out, _ = run(capsys, "fuse", *paths, "--ml", "--p", "0.9", "--q", "0.9")
    assert code == 0 and out == "01\n"


def test_fuse_errors(capsys, tmp_path):
    assert run(capsys, "fuse", "--c", "0.5")[0] == 2
    paths = _write_maps(tmp_path, [[[1, 0]], [[1]]])
    assert run(capsys, "fuse", *paths, "--c", "0.5")[0] == 2
    assert run(capsys, "fuse", str(tmp_path / "missing.txt"), "--c", "0.5")[0] == 2


def test_simulate_empty(capsys, tmp_path):
    out = tmp_path / "stats.json"
    code, _, _ = run(capsys, "simulate", "--p", "0.9", "--d", "0.95", "--pattern", "empty",
                     "--rounds", "1", "--trials", "10", "--seed", "7", "--out", str(out))
    doc = json.loads(out.read_text())
    assert code == 0
    assert doc["classes"]["free_outside_m"]["empirical_accuracy"] == 1.0
    assert doc["seeds"]["master_seed"] == 7


def test_config_file_with_flag_override(capsys, tmp_path):
    conf = tmp_path / "scenario.cfg"
    conf.write_text("# scenario\np=0.9\nqprime=0.9\nd=0.95\nnh=square3\nqmode=additive\n")
    code, out, _ = run(capsys, "plan", "--config", str(conf), "--json")
    assert code == 0 and json.loads(out)["n_required"] == 7
    code, out, _ = run(capsys, "plan", "--config", str(conf), "--d", "0.99", "--json")
    assert json.loads(out)["n_required"] == 14
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour=blue\n")
    assert run(capsys, "plan", "--config", str(bad))[0] == 2


def test_plan_then_simulate_share_threshold(capsys):
    _, out, _ = run(capsys, "plan", "--p", "0.9", "--qprime", "0.9", "--d", "0.95", "--json")
    c_plan = json.loads(out)["c_chosen"]
    code, out, _ = run(capsys, "simulate", "--p", "0.9", "--qprime", "0.9", "--d", "0.95",
                       "--pattern", "random", "--trials", "5", "--width", "6", "--height", "6")
    assert json.loads(out)["c"] == c_plan
