import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from mqhlob.cli import main, parse_grid
from mqhlob.experiments import UsageError

DATA = Path(__file__).parent / "data"


def tree_digest(root: Path) -> dict:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_simulate_is_byte_stable(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["simulate", "--seed", "5", "--horizon", "200", "--out", str(tmp_path / name)]) == 0
    a, b = tree_digest(tmp_path / "a"), tree_digest(tmp_path / "b")
    assert a == b
    assert {"events.csv", "snapshots.jsonl", "summary.json", "config.json", "report/report.json"} <= set(a)
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["seed"] == 5 and summary["n_events"] > 0


def test_simulate_report_calibrate_chain(tmp_path, capsys):
    sim = tmp_path / "sim"
    assert main(["simulate", "--seed", "3", "--horizon", "3000", "--out", str(sim)]) == 0
    assert main(["report", str(sim / "events.csv"), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "report.json").exists()
    assert main(["calibrate", str(sim / "events.csv"), "--out", str(tmp_path / "cal")]) == 0
    frag = json.loads((tmp_path / "cal" / "config_fragment.json").read_text())
    assert frag["hawkes"]["is_alpha"] > 0 and frag["hawkes"]["is_beta"] > 0


def test_report_on_lobster_pair(tmp_path, capsys):
    out = tmp_path / "lob"
    rc = main(["report", str(DATA / "synthetic_message.csv"), str(DATA / "synthetic_orderbook.csv"),
               "--out", str(out)])
    assert rc == 0
    names = {p.name for p in out.iterdir()}
    assert {"report.json", "events.csv", "summary.json", "spread_pdf.csv", "shape_profile.csv",
            "leverage.csv"} <= names
    summary = json.loads((out / "summary.json").read_text())
    assert summary["classification"]["dropped_fraction"] < 0.01


def test_missing_input_exits_2(tmp_path, capsys):
    assert main(["report", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x")]) == 2
    assert "nope.csv" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"hawkes": {}}))
    assert main(["simulate", "--config", str(cfg), "--horizon", "10", "--out", str(tmp_path / "o")]) == 2


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["simulate", "--bogus"])
    assert e.value.code == 2


def test_one_point_scaling_grid_fails(tmp_path, capsys):
    rc = main(["scaling", "--grid", "points=1,0.5,0.2", "--horizon", "50", "--out", str(tmp_path / "s")])
    assert rc == 1


def test_empty_phase_grid_is_usage_error(tmp_path, capsys):
    rc = main(["phase-diagram", "--grid", '{"alpha": [], "beta": [0.5]}', "--out", str(tmp_path / "p")])
    assert rc == 2


def test_single_start_ergodicity_has_nothing_to_compare(tmp_path, capsys):
    rc = main(["ergodicity", "--grid", "s0=5;m0=0.5", "--seeds", "1", "--horizon", "300",
               "--out", str(tmp_path / "e")])
    assert rc == 0
    summary = json.loads((tmp_path / "e" / "summary.json").read_text())
    assert summary["comparisons"] == 0


def test_grid_syntax():
    assert parse_grid("alpha=0.1,1;beta=0.5") == {"alpha": [0.1, 1.0], "beta": [0.5]}
    assert parse_grid('{"s0": [5]}') == {"s0": [5]}
    with pytest.raises(UsageError):
        parse_grid("alpha")


def test_output_root_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MQH_OUTPUT_ROOT", str(tmp_path / "root"))
    assert main(["simulate", "--seed", "1", "--horizon", "50"]) == 0
    assert (tmp_path / "root" / "simulate" / "events.csv").exists()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mqhlob.cli", "simulate", "--seed", "2", "--horizon", "50",
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["status"] == "horizon"
