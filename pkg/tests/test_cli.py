import json

import numpy as np
import pytest

from rvm_mirror.cli import main
from rvm_mirror.config import emit_config, SimulationConfig, OutputConfig
from rvm_mirror.outputs import read_csv


def call(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_trajectory_model(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code, res = call(capsys, "trajectory", "--N", "100", "--x", "0.005", "--v", "-0.3,0.2", "--out", str(out))
    assert code == 0 and res["model"]
    assert max(res["mirror_error"]) < 1e-8
    assert res["t_star"] == pytest.approx(res["dt_quadrature"], rel=1e-8)
    assert abs(res["dt_quadrature"]) <= res["dt_bound"]
    header, rows = read_csv(out)
    assert header == ["t", "x", "v1", "v2", "absV", "Phi", "psi_ext"]
    assert np.allclose(rows[:, 4], np.hypot(rows[:, 2], rows[:, 3]))


def test_trajectory_full_electron(capsys, tmp_path):
    code, res = call(capsys, "trajectory", "--full", "--species", "electron", "--N", "200",
                     "--x", "0.996", "--v", "0.4,-0.1", "--out", str(tmp_path / "e.csv"))
    assert code == 0 and not res["model"]
    assert max(res["mirror_error"]) < 0.05


def test_bad_N_gives_json_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["trajectory", "--N", "4", "--x", "0.1", "--v", "0.1,0.1"])
    assert exc.value.code == 2
    err = json.loads(capsys.readouterr().err)
    assert "minimum" in err["error"] and err["exit_code"] == 2


def test_simulate_writes_artifacts(capsys, tmp_path):
    cfg = SimulationConfig(N=16, nx=64, particles=500, output=OutputConfig(every=32))
    cfile = tmp_path / "c.toml"
    cfile.write_text(emit_config(cfg))
    d = tmp_path / "run"
    code, res = call(capsys, "simulate", "--config", str(cfile), "--out", str(d), "--seed", "5")
    assert code == 0 and res["steps"] == 64
    man = json.loads((d / "manifest.json").read_text())
    assert man["seed"] == 5 and man["config"]["seed"] == 5
    for name in ("diagnostics.csv", "panel.csv", "config.toml", "fields_0.500000.csv", "moments_1.000000.csv"):
        assert (d / name).exists() and name in man["files"]
    header, rows = read_csv(d / "fields_1.000000.csv")
    assert header == ["x", "E1", "E2", "B"] and rows.shape == (65, 4)


def test_simulate_rejects_bad_config(capsys, tmp_path):
    cfile = tmp_path / "c.toml"
    cfile.write_text("N = 5\n")
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", str(cfile), "--out", str(tmp_path / "r")])
    assert exc.value.code == 2
    assert "minimum" in json.loads(capsys.readouterr().err)["error"]


def test_config_prints_defaults(capsys):
    main(["config"])
    text = capsys.readouterr().out
    assert "[profile]" in text and "alpha = 2.0" in text
