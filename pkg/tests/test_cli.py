import subprocess
import sys

import pytest

from llmuno.cli import main
from llmuno.harness import preset, save_config


def test_preset_then_report(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["preset", "e1", "--games", "40", "--seed", "5", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "games: 40" in printed and "records written" in printed
    assert main(["report", str(out)]) == 0
    assert "z-test seat 0" in capsys.readouterr().out


def test_preset_method_switch(tmp_path, capsys):
    out = tmp_path / "cf"
    assert main(["preset", "e5a", "--games", "3", "--method", "counterfactual", "--out", str(out)]) == 0
    assert "counterfactual" in (out / "turns.csv").read_text()


def test_run_config(tmp_path, capsys):
    cfg_path = tmp_path / "exp.ini"
    save_config(preset("e3a", games=10), cfg_path)
    out = tmp_path / "run"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 0
    assert (out / "games.csv").read_text().count("\n") == 11


def test_report_on_empty_dir(tmp_path, capsys):
    assert main(["report", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_preset():
    with pytest.raises(SystemExit):
        main(["preset", "e42"])


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "llmuno.cli", "preset", "e2", "--games", "5",
                           "--out", str(tmp_path)], capture_output=True, text=True, check=True)
    assert "games: 5" in proc.stdout
