import json
import subprocess
import sys

import pytest

from pathhedge.cli import main
from pathhedge.experiments import FAMILIES, SCENARIOS, builtin


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == len(SCENARIOS)
    for name in SCENARIOS:
        assert any(name in line for line in out)


def test_subcommands_match_families():
    for family in FAMILIES:
        with pytest.raises(SystemExit) as exc:
            main([family, "--help"])
        assert exc.value.code == 0


def _small_config(tmp_path):
    doc = json.loads(builtin("delta-mismatched").to_json())
    doc["thresholds"] = [dict(th, level=9) if "level" in th else th for th in doc["thresholds"]]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    return cfg


def test_small_run_writes_outputs(tmp_path, capsys):
    code = main(["delta-hedge", "--config", str(_small_config(tmp_path)), "--out", str(tmp_path),
                 "--seeds", "3", "--levels", "6..9", "--quiet"])
    out = capsys.readouterr().out
    assert code == 0 and "[PASS] delta-mismatched" in out
    d = tmp_path / "delta-mismatched"
    assert {p.name for p in d.iterdir()} == {"runs.csv", "levels.csv", "summary.json"}
    summary = json.loads((d / "summary.json").read_text())
    assert summary["config"]["levels"] == [6, 7, 8, 9] and summary["config"]["seeds"] == 3


def test_thresholds_on_unreported_levels_fail(tmp_path, capsys):
    code = main(["delta-hedge", "--scenario", "delta-mismatched", "--out", str(tmp_path), "--seeds", "2",
                 "--levels", "6..9", "--quiet"])
    assert code == 1 and "[FAIL] delta-mismatched" in capsys.readouterr().out
    summary = json.loads((tmp_path / "delta-mismatched" / "summary.json").read_text())
    ratio = next(th for th in summary["thresholds"] if th["id"] == "ratio16")
    assert ratio["pass"] is False and "not reported" in ratio["note"]


def test_failing_thresholds_give_exit_1(tmp_path):
    doc = json.loads(builtin("delta-matched", seeds=2, levels=[4, 5, 6, 7]).to_json())
    doc["thresholds"] = [{"id": "impossible", "type": "abs_max", "leg": "matched", "level": 7, "atol": 0.0}]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    assert main(["delta-hedge", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 1
    assert (tmp_path / "delta-matched" / "summary.json").exists()


def test_config_errors_give_exit_2(tmp_path, capsys):
    assert main(["variation", "--config", str(tmp_path / "missing.json"), "--quiet"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"legs": [{"name": "x"}], "seeds": 0}))
    assert main(["variation", "--config", str(bad), "--quiet"]) == 2
    assert "seed" in capsys.readouterr().err


@pytest.mark.parametrize("levels", ["9..3", "a..b", "1-4"])
def test_bad_level_range(levels):
    with pytest.raises(SystemExit) as exc:
        main(["variation", "--levels", levels])
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pathhedge.cli", "delta-hedge", "--config",
                           str(_small_config(tmp_path)), "--seeds", "2", "--levels", "6..9", "--out",
                           str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "[PASS] delta-mismatched" in proc.stdout and "seed 2/2" in proc.stderr
