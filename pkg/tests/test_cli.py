import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from parisi_lab.cli import ExperimentConfig, main, run
from parisi_lab.exceptions import ConfigError
from parisi_lab.io import atomic_write_text, csv_text, load_config, read_csv


def write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def test_solve_closed_form(tmp_path):
    cfg = write(tmp_path / "c.toml", '[params]\na = 1.0\n[grids]\nxs = {start = -12, stop = 12, num = 25}\n')
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    cols, rows = read_csv(tmp_path / "o" / "solve.csv")
    assert cols == ["x", "t", "F"]
    err = max(abs(float(r["F"]) - (float(r["t"]) / 2 + math.log(math.cosh(float(r["x"]))))) for r in rows)
    assert err < 1e-7
    assert (tmp_path / "o" / "snapshots.csv").exists()


def test_convexity_scan_pass_and_determinism(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"params": {"a1": 0.3, "a2": 0.9}, "grids": {"xs": [0, 1, -1, 2, -2]}})
    assert main(["convexity-scan", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert "min_gap=" in capsys.readouterr().out
    assert main(["convexity-scan", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "convexity_scan.csv").read_bytes()
    assert a == (tmp_path / "b" / "convexity_scan.csv").read_bytes()
    assert b"\r\n" in a


def test_effective_config_round_trip(tmp_path):
    cfg = write(tmp_path / "c.json", {"params": {"a": {"breakpoints": [0.5], "values": [0.8, 0.3]}}, "seed": 4})
    assert run("parisi-eval", cfg, tmp_path / "a") == 0
    eff = tmp_path / "a" / "effective_config.json"
    first = (tmp_path / "a" / "parisi_eval.csv").read_bytes()
    data = json.loads(eff.read_text())
    data["out"] = str(tmp_path / "b")
    again = write(tmp_path / "eff.json", data)
    assert run("parisi-eval", again) == 0
    assert (tmp_path / "b" / "parisi_eval.csv").read_bytes() == first
    assert ExperimentConfig.from_dict(data).to_dict() == data


def test_violation_exit_code(tmp_path):
    # an absurd tolerance band makes the asymptotic check fail
    cfg = write(tmp_path / "c.json", {"tolerances": {"asymptotic": 1e-30}})
    assert main(["asymptotics", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize(
    "body, needle",
    [
        ({"problem": {"phi": "cosh"}}, "problem.phi"),
        ({"params": {"a": {"values": [2.0]}}}, "params.a"),
        ({"grids": {"xs": []}}, "grids.xs"),
        ({"tolerances": {"gap": -1}}, "tolerances.gap"),
        ({"solver": {"hh": 1}}, "solver.hh"),
        ({"nonsense": {}}, "nonsense"),
    ],
)
def test_config_errors_are_named(tmp_path, capsys, body, needle):
    cfg = write(tmp_path / "c.json", body)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert needle in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path):
    bad = write(tmp_path / "c.toml", "[params]\na = [1,\n")
    with pytest.raises(ConfigError, match="line"):
        load_config(bad)
    bad = write(tmp_path / "c.json", '{"params":\n {"a": }}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(bad)


def test_precondition_failure_exits_one(tmp_path):
    cfg = write(tmp_path / "c.json", {"params": {"a1": 0.9, "a2": 0.3}})
    assert main(["convexity-scan", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert not (tmp_path / "o" / "convexity_scan.csv").exists()


def test_orientation_reversed(tmp_path):
    body = {"params": {"a": {"breakpoints": [0.25], "values": [0.9, 0.3]}}, "problem": {"orientation": "reversed"}}
    cfg = ExperimentConfig.from_dict(body, "parisi-eval")
    assert cfg.param("a").breakpoints == (0.75,)
    assert cfg.param("a").values == (0.3, 0.9)


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"
    import parisi_lab.io as io_mod

    def boom(*a, **k):
        raise KeyboardInterrupt

    monkeypatch.setattr(io_mod.os, "replace", boom)
    with pytest.raises(KeyboardInterrupt):
        atomic_write_text(target, "x\r\n1\r\n")
    assert list(tmp_path.iterdir()) == []


def test_csv_quoting():
    text = csv_text([{"a": 'he said "hi"', "b": 1.5}], ["a", "b"])
    assert text == 'a,b\r\n"he said ""hi""",1.5\r\n'


def test_other_subcommands(tmp_path):
    for cmd, body in [
        ("ineq-suite", {"ineq": {"n_cases": 20}}),
        ("max-principle", {"grids": {"xs": {"start": -4, "stop": 4, "num": 41}}}),
        ("mollify-demo", {"problem": {"phi2": {"name": "log_cosh", "scale": 2.0}}, "grids": {"rs": [2, 4]}}),
        ("asymptotics", {}),
        ("m-curve", {}),
        ("conjecture-scan", {"conjecture": {"n_pairs": 2}}),
        ("minimize", {"problem": {"beta": 0.5}, "minimize": {"n_starts": 1, "maxiter": 40}}),
    ]:
        cfg = write(tmp_path / f"{cmd}.json", body)
        assert main([cmd, "--config", str(cfg), "--out", str(tmp_path / cmd)]) == 0, cmd
        assert (tmp_path / cmd / "effective_config.json").exists()


def test_plot_svg(tmp_path):
    cfg = write(tmp_path / "c.json", {"grids": {"xs": [0.0, 1.0]}})
    assert main(["m-curve", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    csv_path = tmp_path / "d" / "m_curve.csv"
    plot = {"plot": {"csv": str(csv_path), "x": "m", "y": "value", "group": "x"}}
    for name in ("p1", "p2"):
        cfg = write(tmp_path / f"{name}.json", plot)
        assert main(["plot", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    svg1 = (tmp_path / "p1" / "plot.svg").read_bytes()
    assert svg1 == (tmp_path / "p2" / "plot.svg").read_bytes()
    assert len(svg1) > 1000
    ET.fromstring(svg1)


def test_plot_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("m,value\r\n")
    cfg = write(tmp_path / "c.json", {"plot": {"csv": str(empty), "x": "m", "y": "value"}})
    assert main(["plot", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert not (tmp_path / "o" / "plot.svg").exists()
    cfg = write(tmp_path / "d.json", {"plot": {"csv": str(empty), "x": "m", "y": "nope"}})
    with pytest.raises(ConfigError, match="nope"):
        run("plot", cfg, tmp_path / "o")


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path / "c.json", {"params": {"a": 0.5}, "grids": {"xs": [0.0], "ts": [1.0]}})
    proc = subprocess.run(
        [sys.executable, "-m", "parisi_lab.cli", "solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "7"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "o" / "effective_config.json").read_text())["seed"] == 7
