import json

import numpy as np
import pytest

from magnetoconv import io
from magnetoconv.cli import cli_main

FAST = {"Nx": 16, "Ny": 17, "dt": 0.002, "T": 0.04}


def config(tmp_path, **kw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**FAST, "out_dir": str(tmp_path / "out"), **kw}), encoding="utf-8")
    return str(p)


def test_run_conduction(tmp_path, capsys):
    assert cli_main(["run", "--config", config(tmp_path, ic="conduction")]) == 0
    header, data = io.read_series(tmp_path / "out" / "diagnostics.csv")
    assert header[0] == "time" and data.shape[0] == 21
    assert np.all(data[:, 1:] == data[0, 1:])
    snaps = sorted((tmp_path / "out" / "snapshots").iterdir())
    assert len(snaps) == 2
    state, head = io.read_snapshot(snaps[-1])
    assert head["t"] == pytest.approx(0.04) and state.model_tag == "full"
    assert "wrote" in capsys.readouterr().out


def test_run_overrides(tmp_path):
    out = tmp_path / "other"
    argv = ["run", "--config", config(tmp_path), "--model", "effective", "--epsilon", "0.02", "--out", str(out)]
    assert cli_main(argv) == 0
    saved = io.load_config(out / "config.json")
    assert saved.model == "effective" and saved.epsilon == 0.02
    assert any(p.name.startswith("effective_") for p in (out / "snapshots").iterdir())


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--bogus"],
        ["launch", "--config", "x.json"],
        [],
        ["layer", "--config"],
    ],
)
def test_usage_errors(argv):
    assert cli_main(argv) == 2


def test_config_errors_exit_2(tmp_path, capsys):
    assert cli_main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli_main(["run", "--config", config(tmp_path, epsilon=0)]) == 2
    err = capsys.readouterr().err
    assert "epsilon" in err and "flat JSON" in err
    assert cli_main(["run", "--config", config(tmp_path), "--epsilon", "2"]) == 2
    assert cli_main(["layer", "--config", config(tmp_path), "--alpha", "1.5"]) == 2


def test_sweep_outputs(tmp_path):
    cfg = config(tmp_path, eps_list=[0.1, 0.05, 0.025], quantities=["theta-theta0:L2", "u-u0:L2"])
    code = cli_main(["sweep", "--config", cfg])
    out = tmp_path / "out"
    report = io.read_rate_report(out / "rate_report.json")
    assert list(report) == ["theta-theta0:L2", "u-u0:L2"]
    assert code == (0 if report["theta-theta0:L2"]["pass"] else 1)
    for name in ("rates.csv", "rates.gp", "rates.png", "layer.png", "bounds.csv", "layer.csv", "eps_2/errors.csv"):
        assert (out / name).exists(), name
    header, data = io.read_series(out / "rates.csv")
    assert header[0] == "epsilon" and data.shape == (3, 5)
    assert "rates.csv" in (out / "rates.gp").read_text()


def test_layer_command(tmp_path, capsys):
    cfg = config(tmp_path, T=0.1, eps_list=[0.1, 0.05, 0.025])
    code = cli_main(["layer", "--config", cfg, "--alpha", "0.5"])
    assert code in (0, 1)
    text = capsys.readouterr().out
    assert ("PASS" in text) == (code == 0)
    _, data = io.read_series(tmp_path / "out" / "layer.csv")
    assert data.shape == (3, 3)
    assert (tmp_path / "out" / "eps_0" / "layer_profile.csv").exists()


def test_verify_command(tmp_path, capsys):
    assert cli_main(["verify", "--config", config(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) >= 9 and all(line.startswith("PASS") for line in lines)
