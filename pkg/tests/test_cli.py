import csv
import json

import pytest

from qafusion.cli import main

SHORT = "[scenario]\nduration = 3\n"


@pytest.fixture
def short_config(tmp_path):
    path = tmp_path / "short.ini"
    path.write_text(SHORT)
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_unwrap_zero(capsys):
    assert main(["unwrap", "--signal", "0", "--classical", "0"]) == 0
    out = dict(line.split(" = ") for line in capsys.readouterr().out.splitlines())
    assert float(out["a_f"]) == 0.0
    assert out["sign"] == "+1" and out["winding"] == "0"
    assert out["converged"] == "true"


def test_unwrap_out_of_range(capsys):
    assert main(["unwrap", "--signal", "1001", "--classical", "0"]) != 0
    assert "error" in capsys.readouterr().err


def test_simulate(tmp_path, short_config, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", short_config, "--mode", "classical", "--seed", "3", "--out", str(out)]) == 0
    rows = _rows(out / "timeseries_run0.csv")
    assert len(rows) == 1 + 600
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["command"] == "simulate"
    assert "classical" in capsys.readouterr().out


def test_montecarlo_all_modes(tmp_path, short_config):
    out = tmp_path / "mc"
    argv = ["montecarlo", "--config", short_config, "--runs", "2", "--seed", "5",
            "--mode", "all", "--save-runs", "1", "--out", str(out)]
    assert main(argv) == 0
    agg = _rows(out / "aggregate.csv")
    assert {r[0] for r in agg[1:]} == {"classical", "fused", "fused-q2"}
    assert (out / "timeseries_run0.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["modes"] == ["classical", "fused", "fused-q2"]
    assert len(manifest["run_seeds"]) == 2


def test_hist(tmp_path, capsys):
    out = tmp_path / "h"
    argv = ["hist", "--runs", "500", "--range-min", "-10", "--range-max", "10",
            "--noise-mode", "acceleration,signal", "--out", str(out)]
    assert main(argv) == 0
    rows = _rows(out / "histogram.csv")
    counts = {}
    for mode, _, _, c in rows[1:]:
        counts[mode] = counts.get(mode, 0) + int(c)
    assert counts == {"acceleration": 500, "signal": 500}
    assert "std" in capsys.readouterr().out


def test_hist_needs_range(capsys):
    assert main(["hist", "--runs", "10"]) != 0
    assert "range" in capsys.readouterr().err


def test_bad_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[fusion]\nwindow_halfwidth = 0\n")
    assert main(["simulate", "--config", str(bad)]) != 0
    assert "window_halfwidth" in capsys.readouterr().err


def test_missing_config_exits_nonzero(tmp_path, capsys):
    assert main(["montecarlo", "--config", str(tmp_path / "nope.ini")]) != 0
    assert capsys.readouterr().err


def test_bad_mode_exits_nonzero(short_config, capsys):
    assert main(["simulate", "--config", short_config, "--mode", "warp"]) != 0


def test_usage_error_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["unwrap"])
    assert exc.value.code != 0
