import csv
import json
import subprocess
import sys

import pytest

from pulsefront.cli import ConfigError, load_config, main

SWEEP = """
[medium]
kind = cubic
a = 1.0
b = 0.25

[solver]
h = 0.1
domain_pad = 30

[experiment]
kind = speed-sweep
L = 8, 12
out = {out}
"""

SIGNS = """
[medium.negative]
kind = cubic
a = 1.0
b = 0.75

[medium.positive]
kind = cubic
a = 1.0
b = 0.3

[solver]
h = 0.1
domain_pad = 30

[experiment]
kind = sign-classify
L = 8
out = {out}
"""


def _write(tmp_path, text, name="cfg.ini", out="res"):
    path = tmp_path / name
    path.write_text(text.format(out=tmp_path / out))
    return path


def test_speed_sweep_outputs_and_job_independence(tmp_path):
    cfg = _write(tmp_path, SWEEP)
    assert main(["run", str(cfg)]) == 0
    assert main(["run", str(cfg), "--jobs", "2", "--out", str(tmp_path / "par")]) == 0
    serial = (tmp_path / "res" / "speed-sweep.csv").read_text()
    assert serial == (tmp_path / "par" / "speed-sweep.csv").read_text()
    rows = list(csv.DictReader(serial.splitlines()))
    assert [float(r["L"]) for r in rows] == [8.0, 12.0]
    digest = load_config(cfg).digest
    assert all(r["config_hash"] == digest and r["pass"] == "true" for r in rows)
    doc = json.loads((tmp_path / "res" / "speed-sweep.json").read_text())
    assert doc["passed"] and doc["config_hash"] == digest
    dat = (tmp_path / "res" / "speed-sweep.dat").read_text()
    assert dat.startswith(f"# config_hash {digest}")


def test_sign_classify(tmp_path):
    cfg = _write(tmp_path, SIGNS)
    assert main(["run", str(cfg)]) == 0
    rows = json.loads((tmp_path / "res" / "sign-classify.json").read_text())["rows"]
    assert {r["medium"]: r["observed"] for r in rows} == {"medium.negative": "-", "medium.positive": "+"}


def test_validate_reports_each_medium(tmp_path, capsys):
    cfg = _write(tmp_path, SIGNS)
    assert main(["validate", str(cfg)]) == 0
    lines = [json.loads(s) for s in capsys.readouterr().out.splitlines()]
    assert [d["medium"] for d in lines] == ["medium.negative", "medium.positive"]
    assert [d["positive_mean"] for d in lines] == [False, True]
    assert all(d["bistable"] and d["constant_diffusion"] for d in lines)


@pytest.mark.parametrize("edit", [
    ("kind = speed-sweep", "kind = nonsense"),
    ("L = 8, 12", "L = 2"),
    ("L = 8, 12", "L = 8.05"),
    ("[solver]", "[solver_x]"),
])
def test_bad_configs_are_rejected(tmp_path, edit):
    cfg = _write(tmp_path, SWEEP.replace(*edit))
    with pytest.raises(ConfigError):
        load_config(cfg)
    assert main(["run", str(cfg)]) == 2


def test_hash_ignores_layout(tmp_path):
    a = _write(tmp_path, SWEEP, "a.ini")
    b = _write(tmp_path, "# comment\n" + SWEEP.replace("h = 0.1", "h   =   0.1"), "b.ini")
    assert load_config(a).digest == load_config(b).digest


def test_console_entry_point_help():
    out = subprocess.run([sys.executable, "-m", "pulsefront.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "run" in out.stdout and "validate" in out.stdout
