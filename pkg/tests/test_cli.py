from __future__ import annotations

import json
import subprocess
import sys

import pytest

from worldsheet import cli


def run(argv, capsys):
    status = cli.main(argv)
    out = capsys.readouterr().out
    return status, out


def test_verify_cylinder(capsys):
    status, out = run(["verify", "--catalog", "cylinder", "--deterministic"], capsys)
    rep = json.loads(out)
    assert status == 0 and rep["passed"]
    assert rep["convergence"]["resolutions"] == [[33, 33], [65, 65], [129, 129]]
    r = rep["convergence"]["ratios"]["gamma_fact"][-1]
    assert 3.5 <= r <= 4.5
    assert "meta" not in rep


def test_bc_plane_reports_first_condition(capsys):
    status, out = run(["bc", "--catalog", "plane", "--mu", "1", "--alpha", "1", "--beta", "1"], capsys)
    rep = json.loads(out)
    assert status == 1
    assert any(f.startswith("BC1 violated") for f in rep["failures"])
    assert rep["ends"]["xi1_min"]["norms"]["r1"]["linf"] == 1.0
    assert rep["predicted"]["K_par_norm2"] == 0.25


def test_analyze_torus(capsys):
    status, out = run(["analyze", "--catalog", "torus", "--resolution", "65x65"], capsys)
    inv = json.loads(out)["invariants"]
    assert status == 0
    assert abs(inv["euler_characteristic"]["value"]) < 0.01
    assert abs(inv["chern"]["raw"]) < 0.01


def test_bc_null_ends_are_findings(capsys):
    status, out = run(["bc", "--catalog", "rotating_rod:delta=0", "--alpha", "1", "--beta", "1"], capsys)
    rep = json.loads(out)
    assert status == 0
    assert rep["ends"]["xi1_min"]["classification"] == "null"
    assert len(rep["findings"]) == 2


def test_bc_synthetic_passes(capsys):
    status, out = run(["bc", "--synthetic", "0.5", "--alpha", "1", "--beta", "-2", "--mass", "0.3"], capsys)
    assert status == 0 and json.loads(out)["passed"]


def test_vary_interior_bump(capsys):
    status, out = run(["vary", "--catalog", "cylinder:twist=0.3", "--resolution", "65x65",
                       "--deform", "0.5,3;0.3,1.5;1,0.5", "--alpha", "1"], capsys)
    rep = json.loads(out)
    assert status == 0, rep["failures"]
    assert rep["variation"]["interior"] is True


def test_generate_then_analyze(tmp_path, capsys):
    doc = tmp_path / "sheet.json"
    assert cli.main(["generate", "--catalog", "disk", "--resolution", "65x65", "--out", str(doc)]) == 0
    capsys.readouterr()
    status, out = run(["analyze", "--input", str(doc), "--fields", "--format", "text"], capsys)
    assert status == 0
    assert "invariants.euler_characteristic.value" in out and "fields.gamma" in out


def test_verify_needs_a_generator(tmp_path, capsys):
    doc = tmp_path / "sheet.json"
    cli.main(["generate", "--catalog", "plane", "--out", str(doc)])
    capsys.readouterr()
    status, out = run(["verify", "--input", str(doc)], capsys)
    assert status == 2 and json.loads(out)["error"] == "UnsupportedOperation"


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze"],
        ["analyze", "--catalog", "plane", "--input", "x.json"],
        ["analyze", "--catalog", "nope"],
        ["analyze", "--catalog", "plane", "--tol-scale", "0"],
        ["bc", "--catalog", "plane", "--mu", "-1"],
        ["vary", "--catalog", "plane"],
    ],
)
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == 2


def test_bad_resolution_is_argparse_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze", "--catalog", "plane", "--resolution", "3x3"])
    assert exc.value.code == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"catalog": "cylinder", "resolution": "17x17", "alpha": 2.0}))
    status, out = run(["analyze", "--config", str(cfg), "--alpha", "0.5", "--deterministic"], capsys)
    rep = json.loads(out)
    assert status == 0 and rep["invariants"]["action"]["alpha"] == 0.5
    cfg.write_text(json.dumps({"catalog": "cylinder", "bogus": 1}))
    assert cli.main(["analyze", "--config", str(cfg)]) == 2


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "worldsheet", "analyze", "--catalog", "plane",
                        "--resolution", "9x9", "--format", "text"], capture_output=True, text=True)
    assert p.returncode == 0 and "passed: True" in p.stdout


def test_reports_use_17_digits(capsys):
    _, out = run(["analyze", "--catalog", "cylinder:twist=0.3", "--resolution", "17x17", "--deterministic"], capsys)
    area = json.loads(out)["invariants"]["action"]["I0"]
    assert format(area, ".17g") in out
