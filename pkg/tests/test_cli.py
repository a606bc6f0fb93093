import json
import os

import numpy as np
import pytest

from solispec.cli import main
from solispec.config import RunConfig, print_defaults


@pytest.fixture()
def cfg_path(tmp_path):
    cfg = {
        "nonlinearity": {"family": "power", "params": [1.0]},
        "mu": 1.0,
        "grid": {"R": 20.0, "h": 2e-3},
        "scan": {"lmin": 1.5, "lmax": 3.0, "n": 4},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_print_defaults_round_trips():
    payload = json.loads(print_defaults())
    assert payload["mu"] == 1.0
    assert payload["scan"]["n"] == 200


def test_no_command_shows_help(capsys):
    assert main([]) == 2


def test_ground_command(tmp_path, cfg_path):
    out = str(tmp_path / "ground.csv")
    assert main(["ground", "--config", cfg_path, "--out", out]) == 0
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert set(data.dtype.names) == {"x", "Q", "Qp"}
    mid = len(data) // 2
    assert data["Q"][mid] == pytest.approx(np.sqrt(2.0), abs=1e-8)
    sidecar = json.loads((tmp_path / "ground.json").read_text())
    assert sidecar["rate"] == pytest.approx(1.0, abs=1e-3)
    assert sidecar["c0"] == pytest.approx(2.0 * np.sqrt(2.0), abs=1e-2)
    assert "config_hash" in sidecar and sidecar["tool"]["version"]


def test_jost_command(tmp_path, cfg_path):
    out = str(tmp_path / "jost.csv")
    assert main(["jost", "--config", cfg_path, "--lambda", "2.0", "--out", out]) == 0
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert set(data.dtype.names) == {"x", "f", "g", "fp", "gp"}
    sidecar = json.loads((tmp_path / "jost.json").read_text())
    assert sidecar["residual"] <= 1e-7


def test_invert_check_command(cfg_path, capsys):
    assert main(["invert-check", "--config", cfg_path, "--lambda", "2.0"]) == 0
    out = capsys.readouterr().out
    assert "r_u" in out and "r_v" in out
    r_u = float(out.split("r_u =")[1].split()[0])
    assert r_u <= 1e-6


def test_spectrum_command(tmp_path):
    cfg = {
        "nonlinearity": {"family": "power", "params": [1.0]},
        "mu": 1.0,
        "grid": {"R": 20.0, "h": 2e-3},
        "scan": {"lmin": 1.5, "lmax": 3.0, "n": 2},
        "eigen": {"R": 12.0, "n": 801},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = str(tmp_path / "spec.json")
    assert main(["spectrum", "--config", str(path), "--out", out]) == 0
    payload = json.loads((tmp_path / "spec.json").read_text())
    lams = [e["lambda"] for e in payload["eigenvalues"]]
    h_eig = payload["grid"]["h"]
    assert any(abs(l) <= 2 * h_eig for l in lams)


def test_scan_command_and_outputs(tmp_path, cfg_path):
    out = str(tmp_path / "report.json")
    assert main(["scan", "--config", cfg_path, "--out", out]) == 0
    payload = json.loads((tmp_path / "report.json").read_text())
    assert all(r["verdict"] == "no-embedded-eigenvalue" for r in payload["records"])
    assert payload["config_hash"] and payload["tool"]["version"]
    assert payload["timestamp"] is None
    csv_text = (tmp_path / "report.csv").read_text().splitlines()
    assert csv_text[0] == "lambda,v0,v0p,mismatch,verdict"
    assert len(csv_text) == 1 + 4


def test_scan_stamp_embeds_timestamp(tmp_path, cfg_path):
    out = str(tmp_path / "report.json")
    assert main(["scan", "--config", cfg_path, "--n", "1", "--lmax", "1.5",
                 "--lmin", "1.5", "--out", out, "--stamp"]) == 0
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["timestamp"] is not None


def test_scan_empty_grid_exits_2_without_files(tmp_path, cfg_path):
    out = str(tmp_path / "r.json")
    code = main(["scan", "--config", cfg_path, "--n", "0", "--out", out])
    assert code == 2
    assert not os.path.exists(out)
    assert not os.path.exists(str(tmp_path / "r.csv"))


def test_scan_grid_in_gap_exits_2(tmp_path, cfg_path):
    code = main(["scan", "--config", cfg_path, "--lmin", "0.2", "--lmax", "0.8",
                 "--out", str(tmp_path / "r.json")])
    assert code == 2


def test_scan_determinism_bitwise(tmp_path, cfg_path):
    out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
    assert main(["scan", "--config", cfg_path, "--out", out1]) == 0
    assert main(["scan", "--config", cfg_path, "--out", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_hypothesis_violation_exits_1(tmp_path):
    cfg = {
        "nonlinearity": {"family": "saturable", "params": [2.0]},  # no profile exists
        "mu": 1.0,
        "grid": {"R": 20.0, "h": 2e-3},
        "scan": {"lmin": 1.5, "lmax": 3.0, "n": 2},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["ground", "--config", str(path), "--out", str(tmp_path / "g.csv")]) == 1


def test_malformed_config_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["ground", "--config", str(path), "--out", str(tmp_path / "g.csv")]) == 2


def test_missing_config_exits_2(tmp_path):
    assert main(["ground", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "g.csv")]) == 2


def test_control_command_detects_candidate(tmp_path):
    out = str(tmp_path / "control.json")
    assert main(["control", "--mu", "1.0", "--depth", "6.0", "--n", "9", "--out", out]) == 0
    payload = json.loads((tmp_path / "control.json").read_text())
    assert payload["predicted_embedded_levels"] == [3.0]
    assert payload["candidate"] is not None
    assert abs(payload["candidate"]["lambda"] - 3.0) <= 0.05
    assert payload["candidate"]["verdict"] == "embedded-candidate"


def test_control_command_shallow_well(tmp_path):
    out = str(tmp_path / "control.json")
    assert main(["control", "--mu", "1.0", "--depth", "0.1", "--n", "7", "--out", out]) == 0
    payload = json.loads((tmp_path / "control.json").read_text())
    assert payload["candidate"] is None
    assert all(r["verdict"] != "embedded-candidate" for r in payload["records"])


def test_config_validation_rules(tmp_path):
    bad = {"mu": -1.0}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(Exception):
        RunConfig.from_file(str(path)).validate()
    ok = RunConfig()
    assert ok.validate() is ok
    assert len(ok.config_hash()) == 64


def test_small_box_warns(tmp_path):
    cfg = {"mu": 1.0, "grid": {"R": 15.0}, "scan": {"lmin": 1.5, "lmax": 2.0, "n": 2}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    with pytest.warns(UserWarning, match="far-field"):
        RunConfig.from_file(str(path)).validate()
