import csv
import subprocess
import sys

import pytest

import pnsampler
from pnsampler.cli import main


def test_version(capsys):
    assert main(["version"]) == 0
    out = capsys.readouterr().out
    assert pnsampler.__version__ in out
    assert pnsampler.BACKEND in out


def test_exact_triangle(capsys):
    assert main(["exact", "triangle"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "key,state,probability"
    probs = [float(line.split(",")[2]) for line in lines[1:]]
    assert probs == pytest.approx([1 / 6, 1 / 3, 1 / 2], rel=1e-15)
    assert [line.split(",")[1] for line in lines[1:]] == ["A", "B", "C"]


def test_exact_qubo_labels(capsys):
    assert main(["exact", "qubo:n=3,std=1,seed=0"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 8
    # bit i of the key is character i of the label
    assert rows[1]["state"] == "100"


@pytest.mark.parametrize(
    "argv",
    [
        ["exact", "ising"],
        ["exact", "donuts"],
        ["exact", "qubo:n=8,std=1,seed=0", "--max-states", "16"],
        ["run", "/nonexistent/exp.ini"],
        ["frobnicate"],
        [],
    ],
)
def test_invalid_exits_with_two(argv, capsys):
    assert main(argv) == 2


def test_run(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[experiment]\n"
        "model = triangle\n"
        "methods = rf, mh\n"
        "budgets = 1000\n"
        "replications = 2\n"
        "output = out.csv\n"
        "metrics = tvd\n"
    )
    assert main(["run", str(cfg), "--workers", "1"]) == 0
    out = tmp_path / "out.csv"
    assert capsys.readouterr().out.strip() == str(out)
    with open(out, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 4


def test_invalid_config_exits_with_two(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\nmodel = donuts\nmethods = rf\nbudgets = 10\n")
    assert main(["run", str(cfg)]) == 2
    assert "error" in capsys.readouterr().err


def test_console_script_module():
    out = subprocess.run(
        [sys.executable, "-m", "pnsampler.cli", "version"], capture_output=True, text=True, check=True
    )
    assert out.stdout.startswith("pnsampler ")
