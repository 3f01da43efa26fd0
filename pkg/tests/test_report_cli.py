import csv
import json
import os

import pytest

from thimblekit.cli import main, parse_angle, parse_window
from thimblekit.report import ReportBundle, RunConfig, dumps, emit, emit_all, run_model

FAST = {"connections", "borel", "flow"}


@pytest.fixture(scope="module")
def airy_bundle():
    return run_model(RunConfig(model="airy"))


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(model="airy", tol_g=0.0)
    with pytest.raises(ValueError):
        RunConfig(model="airy", terms=0)
    with pytest.raises(ValueError):
        RunConfig(model="gamma", window=(2, -2))
    with pytest.raises(ValueError):
        RunConfig(model="gamma", window=(-40, 40))
    with pytest.raises(ValueError):
        RunConfig(model="quartic")
    with pytest.raises(ValueError):
        RunConfig.from_dict({"model": "airy", "colour": "red"})
    cfg = RunConfig(model="gamma", window=[0, 3], hbar=[1, 2])
    assert cfg.window == (0, 3) and cfg.hbar_grid == [1.0, 2.0]
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_config_from_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"model": "bessel", "tol_quad": 1e-9}))
    cfg = RunConfig.from_json(str(p))
    assert cfg.model == "bessel" and cfg.tol_quad == 1e-9


def test_report_structure(airy_bundle):
    d = json.loads(airy_bundle.to_json())
    assert set(d) == {"model", "config_echo", "geometric", "resurgent", "verification", "pass"}
    assert d["config_echo"] == json.loads(dumps(RunConfig(model="airy").to_dict()))
    assert d["model"]["name"] == "airy" and d["model"]["basis"] == ["p-", "p+"]
    assert all(d["pass"].values()) and airy_bundle.ok
    assert d["geometric"]["minus"]["entries"] == [["1", "1"], ["0", "1"]]
    assert d["resurgent"]["plus"]["entries"] == [["1", "-1"], ["0", "1"]]


def test_report_roundtrip(airy_bundle):
    text = airy_bundle.to_json()
    assert ReportBundle.from_json(text).to_json() == text


def test_deterministic():
    a = run_model(RunConfig(model="bessel"), stages=FAST).to_json()
    b = run_model(RunConfig(model="bessel"), stages=FAST).to_json()
    assert a == b


def test_emit(airy_bundle, tmp_path):
    cfg = RunConfig(model="airy", out=str(tmp_path))
    files = emit_all(airy_bundle, cfg)
    names = {os.path.basename(f) for f in files}
    assert "report.json" in names and "matrix_resurgent_plus.csv" in names
    paths = [f for f in files if os.path.basename(f).startswith("path_")]
    assert paths
    with open(paths[0]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["s", "re", "im", "F", "G", "wrap"]
    assert all(not v.startswith("-0.000000000000e+00") for v in rows[1])
    with open(os.path.join(tmp_path, "matrix_geometric_minus.csv")) as fh:
        assert list(csv.reader(fh)) == [["", "p-", "p+"], ["p-", "1", "1"], ["p+", "0", "1"]]
    with pytest.raises(ValueError):
        emit(airy_bundle, "xml", str(tmp_path))


def test_stage_failure_is_reported():
    # far too few terms for the Pade scan
    b = run_model(RunConfig(model="airy", terms=4), stages={"borel"})
    assert not b.ok
    assert b.passed.get("stage_borel") is False or b.passed.get("pade_singularity") is False


def test_parsers():
    assert parse_angle("pi/2") == pytest.approx(1.5707963267948966)
    assert parse_angle("-0.5*pi") == pytest.approx(-1.5707963267948966)
    assert parse_angle("0.25") == 0.25
    assert parse_window("-2..3") == (-2, 3)
    with pytest.raises(Exception):
        parse_window("1:3")


def test_cli_hopf(capsys, tmp_path):
    assert main(["hopf", "--wmax", "4", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS  coassociativity" in out and "FAIL" not in out
    assert json.loads((tmp_path / "hopf.json").read_text())["pass"] is True


def test_cli_connections(capsys):
    assert main(["connections", "--model", "airy"]) == 0
    out = capsys.readouterr().out
    assert "p- -> p+" in out and "1 connection(s)" in out


def test_cli_borel(capsys):
    assert main(["borel", "--model", "bessel", "--saddle", "w-", "--terms", "30"]) == 0
    assert "PASS  pade_singularity" in capsys.readouterr().out


def test_cli_trace(capsys, tmp_path):
    assert main(["trace", "--model", "airy", "--theta", "0.1", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("trace_*.csv"))) == 8


def test_cli_bad_window():
    with pytest.raises(SystemExit) as exc:
        main(["connections", "--model", "gamma", "--window", "3..x"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["connections", "--model", "gamma", "--window", "3..1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--model", "airy", "--tol-g", "-1"])
    assert exc.value.code == 2
