import json
import subprocess
import sys
from pathlib import Path

import pytest

from stencilcgra.cli import main
from stencilcgra.dfg import deserialize, validate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_cfg(tmp_path, **kw) -> Path:
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(kw))
    return p


def test_gen_1d(tmp_path):
    cfg = write_cfg(tmp_path, n=64, rx=2, workers=3, seed=1)
    assert main(["gen", "--spec", str(cfg), "--out", str(tmp_path / "o")]) == 0
    g = deserialize((tmp_path / "o" / "graph.json").read_text())
    assert validate(g) == []
    assert (tmp_path / "o" / "graph.dot").read_text().startswith("digraph")


def test_gen_strips(tmp_path):
    out = tmp_path / "o"
    assert main(["gen", "--spec", str(CONFIGS / "strips_2d.json"), "--out", str(out),
                 "--format", "json"]) == 0
    plan = json.loads((out / "plan.json").read_text())
    assert plan["block_width"] == 40 and len(plan["strips"]) == 5
    assert sorted(p.name for p in out.glob("graph.strip*.json")) == [
        f"graph.strip{i}.json" for i in range(5)]
    assert not list(out.glob("*.dot"))


def test_verify_pass(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["verify", "--spec", str(CONFIGS / "small_2d.json"), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["outcome"] == "done" and report["bit_exact"] and report["traffic_match"]
    assert json.loads(capsys.readouterr().out) == report
    assert (out / "highwater.csv").read_text().startswith("edge,src,dst,capacity,high_water")
    assert json.loads((out / "stats.json").read_text())["completed"] is True


def test_verify_deadlock_exit_code(tmp_path):
    out = tmp_path / "o"
    rc = main(["verify", "--spec", str(CONFIGS / "small_2d.json"), "--out", str(out),
               "--force-buffer", "2"])
    assert rc == 3
    assert json.loads((out / "report.json").read_text())["outcome"] == "deadlock"


def test_verify_cycle_limit_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, n=64, rx=2, workers=3)
    assert main(["verify", "--spec", str(cfg), "--out", str(tmp_path / "o"),
                 "--max-cycles", "5"]) == 3


@pytest.mark.parametrize("body", [
    '{"n": 4, "rx": 8}',
    '{"rx": 1}',
    '{"n": 64, "rx": 1, "coeffs": [1, 2]}',
    '{"nx": 96, "ny": 45, "rx": 12, "ry": 12, "storage_budget": 10}',
    "{broken",
])
def test_config_errors(tmp_path, capsys, body):
    p = tmp_path / "bad.json"
    p.write_text(body)
    assert main(["verify", "--spec", str(p), "--out", str(tmp_path / "o")]) == 4
    assert capsys.readouterr().err.startswith("error:")


def test_missing_file(tmp_path):
    assert main(["gen", "--spec", str(tmp_path / "nope.json")]) == 4


def test_roofline(tmp_path):
    out = tmp_path / "o"
    assert main(["roofline", "--spec", str(CONFIGS / "full_2d.json"), "--out", str(out)]) == 0
    d = json.loads((out / "roofline.json").read_text())
    assert d["w_max"] == 5 and abs(d["peak_gflops"] - 559) < 1
    assert (out / "roofline.csv").exists()


def test_verify_reports_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["verify", "--spec", str(CONFIGS / "small_1d.json"), "--out", str(d)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "stats.json").read_bytes() == (b / "stats.json").read_bytes()


def test_console_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, n=32, rx=1, workers=2)
    proc = subprocess.run([sys.executable, "-m", "stencilcgra.cli", "verify", "--spec",
                           str(cfg), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["bit_exact"] is True
