import json
import math
import os

import numpy as np
import pytest

from sflab import ma_lab
from sflab.cli import main
from sflab.fiber_models import TABLE_REGISTRY

DATA = os.path.join(os.path.dirname(__file__), "data")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def i1_model(tmp_path):
    p = tmp_path / "i1.model"
    p.write_text("type = I_1\n")
    return str(p)


def test_classify_parabolic(capsys):
    code, out, _ = run(capsys, "classify", "1", "1", "0", "1")
    assert code == 0
    obj = json.loads(out)
    assert obj["type"] == "I_1"
    assert obj["order"] == "inf"
    assert obj["bad_cycles"] == 1


def test_classify_elliptic(capsys):
    code, out, _ = run(capsys, "classify", "0", "1", "-1", "1")
    assert code == 0
    obj = json.loads(out)
    assert obj["type"] == "II"
    assert obj["order"] == 6
    assert obj["bad_cycles"] == 0


def test_classify_rejects_non_unimodular(capsys):
    code, _, err = run(capsys, "classify", "1", "0", "0", "2")
    assert code == 2
    assert "input error" in err


def test_table_matches_golden_file(capsys):
    code, out, _ = run(capsys, "table")
    assert code == 0
    with open(os.path.join(DATA, "golden_table.csv"), "r",
              encoding="utf-8") as fh:
        golden = fh.read()
    assert out == golden


def test_table_golden_detects_corruption(capsys, monkeypatch):
    # a corrupted registry entry must break the golden comparison
    import dataclasses
    rows = list(TABLE_REGISTRY)
    rows[0] = dataclasses.replace(rows[0], theta_incomplete=0.9)
    monkeypatch.setattr("sflab.cli.TABLE_REGISTRY", tuple(rows))
    code, out, _ = run(capsys, "table")
    assert code == 0
    with open(os.path.join(DATA, "golden_table.csv"), "r",
              encoding="utf-8") as fh:
        golden = fh.read()
    assert out != golden


def test_fiber_info(capsys, i1_model):
    code, out, _ = run(capsys, "fiber-info", i1_model, "--z", "0.2,0")
    assert code == 0
    obj = json.loads(out)
    assert obj["type"] == "I_1"
    assert obj["N"] == 0
    assert abs(obj["at"]["pairing"]
               - abs(math.log(0.2)) / (2 * math.pi)) < 1e-12
    assert obj["at"]["monodromy_residual"] < 1e-12


def test_metric_eval_check(capsys, i1_model):
    code, out, _ = run(capsys, "metric-eval", i1_model,
                       "--z", "0.1,0", "--w", "0,0", "--check")
    assert code == 0
    obj = json.loads(out)
    assert abs(obj["h_ww"] - math.pi / math.log(10)) < 1e-12
    assert abs(obj["fiber_area"] - 1.0) < 1e-14


def test_scan_curvature_csv_and_determinism(capsys, i1_model):
    args = ("scan", "--kind", "curvature", i1_model,
            "--radii", "1e-8:1e-5:4:log")
    code, out1, _ = run(capsys, *args)
    assert code == 0
    lines = out1.strip().splitlines()
    assert lines[0] == "r,z_abs,theta_sq,target,ratio"
    assert len(lines) == 5
    ratio = float(lines[1].split(",")[4])
    assert abs(ratio - 1) < 1e-4
    code, out2, _ = run(capsys, *args)
    assert out2 == out1  # byte-identical


def test_scan_radii_lin(capsys, i1_model):
    code, out, _ = run(capsys, "scan", "--kind", "curvature", i1_model,
                       "--radii", "0.001:0.002:3:lin")
    assert code == 0
    rows = out.strip().splitlines()[1:]
    assert [float(r.split(",")[1]) for r in rows] == [0.001, 0.0015, 0.002]


def test_scan_volume_json_check(capsys, i1_model):
    code, out, _ = run(capsys, "scan", "--kind", "volume", i1_model,
                       "--radii", "1e2:1e5:8:log", "--format", "json",
                       "--check")
    assert code == 0
    obj = json.loads(out)
    assert obj["columns"] == ["s", "volume"]
    assert abs(obj["exponent"] - 4 / 3) < 0.05


def test_scan_cone_angle_check(capsys, tmp_path):
    p = tmp_path / "ii.model"
    p.write_text("type = II\n")
    code, out, _ = run(capsys, "scan", "--kind", "cone-angle", str(p),
                       "--radii", "1e-4:1e-8:3:log", "--check")
    assert code == 0
    last = out.strip().splitlines()[-1].split(",")
    assert abs(float(last[1]) - 1 / 6) < 0.02 / 6


def test_scan_inj(capsys, i1_model):
    code, out, _ = run(capsys, "scan", "--kind", "inj", i1_model,
                       "--radii", "1e2:1e5:8:log", "--check",
                       "--format", "json")
    assert code == 0
    obj = json.loads(out)
    assert abs(obj["shortest_exponent"] + 1 / 3) < 0.03


def test_scan_alh_check_failure_exit_code(capsys, tmp_path):
    # a fit window deep inside the round-off floor cannot recover the rate
    p = tmp_path / "i0.model"
    p.write_text("type = I_0\ntau_slope_re = 0.25\n")
    code, _, err = run(capsys, "scan", "--kind", "alh", str(p),
                       "--radii", "40:80:6:lin", "--check")
    assert code == 1
    assert "check failed" in err


def test_scan_bad_radii_exit_code(capsys, i1_model):
    code, _, err = run(capsys, "scan", "--kind", "curvature", i1_model,
                       "--radii", "nope")
    assert code == 2
    assert "input error" in err


def test_missing_model_exit_code(capsys):
    code, _, err = run(capsys, "fiber-info", "/nonexistent/x.model")
    assert code == 2


def test_ma_solve_round_trip(capsys, tmp_path):
    n = 8
    xs = np.arange(n) / n
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    f = ma_lab.normalize_compatibility(
        0.2 * np.sin(2 * math.pi * X) + 0.1 * np.cos(2 * math.pi * (X + Y)))
    fpath = str(tmp_path / "f.grid")
    upath = str(tmp_path / "u.grid")
    ma_lab.write_grid(fpath, f, 1)
    code, out, _ = run(capsys, "ma-solve", fpath, "--solution", upath,
                       "--check")
    assert code == 0
    obj = json.loads(out)
    assert obj["residual_inf"] < 1e-10
    assert obj["positivity_margin"] > 0
    u, m, n2 = ma_lab.read_grid(upath)
    assert (m, n2) == (1, n)
    with open(upath + ".json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    assert meta["residual_inf"] == obj["residual_inf"]


def test_sobolev_probe_cli(capsys):
    code, out, _ = run(capsys, "sobolev-probe", "--beta", "4",
                       "--alpha", "2", "--check")
    assert code == 0
    obj = json.loads(out)
    assert obj["stability_factor"] <= 4


def test_out_writes_file(capsys, tmp_path, i1_model):
    target = str(tmp_path / "scan.csv")
    code, out, _ = run(capsys, "scan", "--kind", "curvature", i1_model,
                       "--radii", "1e-6:1e-5:2:log", "--out", target)
    assert code == 0
    assert out == ""
    with open(target, "r", encoding="utf-8") as fh:
        assert fh.readline().strip() == "r,z_abs,theta_sq,target,ratio"
