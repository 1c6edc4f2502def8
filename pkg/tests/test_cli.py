from __future__ import annotations

import csv
import io
import subprocess
import sys

import pytest

from ada_arena.cli import EXIT_ASSERT, EXIT_CONFIG, main, read_config_file


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_ibe_selftest(tmp_path, capsys):
    out = tmp_path / "ibe.csv"
    assert main(["ibe", "--m", "16", "--trials", "3", "--out", str(out), "--assert"]) == 0
    assert "ibe_selftest: rate=1.0000" in capsys.readouterr().out
    assert [r["outcome"] for r in rows(out)] == ["1", "1", "1"]


def test_attack_natural_and_alias(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["--n", "5", "--c", "20", "--rounds", "60", "--trials", "3", "--seed", "4"]
    assert main(["attack", "natural", *common, "--out", str(a)]) == 0
    assert main(["natural_attack", *common, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert capsys.readouterr().out.count("natural_attack: rate=") == 2


def test_balanced_reports_ell(tmp_path, capsys):
    out = tmp_path / "bal.csv"
    assert main(["attack", "balanced", "--n", "5", "--rounds", "40", "--trials", "1", "--out", str(out)]) == 0
    line = capsys.readouterr().out
    assert "ell=" in line and "(k=" in line
    assert rows(out)[0]["ell"] == str(40 + 16 * 7)


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ADA_ARENA_OUT", str(tmp_path))
    assert main(["gl", "--mb", "4", "--n", "30", "--trials", "2"]) == 0
    assert (tmp_path / "gl_decode.csv").exists()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# gl run\nn = 30\nmb = 5  # bits\ntrials = 2\nlambda = 16\n")
    assert read_config_file(str(cfg)) == {"n": 30, "mb": 5, "trials": 2, "lam": 16}
    out = tmp_path / "gl.csv"
    assert main(["gl", "--config", str(cfg), "--trials", "4", "--out", str(out)]) == 0
    assert len(rows(out)) == 4


@pytest.mark.parametrize("argv", [
    ["gl", "--n", "0"],
    ["gl", "--mb", "40", "--n", "20"],
    ["attack", "natural", "--mechanism", "laplace"],
    ["dp", "--c", "2"],
    ["gl", "--config", "/nonexistent/file.cfg"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert main([*argv, "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_bad_config_file_exit_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["gl", "--config", str(bad)]) == EXIT_CONFIG
    bad.write_text("n = many\n")
    assert main(["gl", "--config", str(bad)]) == EXIT_CONFIG


def test_assert_failure_exit_3(tmp_path):
    argv = ["gl", "--mb", "4", "--n", "30", "--trials", "2", "--out", str(tmp_path / "g.csv"), "--assert"]
    assert main([*argv, "--threshold", "1.01"]) == EXIT_ASSERT
    assert main(argv) == 0


def test_sweep_to_stdout(capsys):
    assert main(["sweep", "--kind", "gl_decode", "--grid-n", "20", "40", "--mb", "4", "--trials", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("n,rounds,c,sigma")
    assert len(lines) == 3


def test_calibrate_small(tmp_path, capsys):
    out = tmp_path / "cal.csv"
    assert main(["calibrate", "--n", "5", "--taus", "3.5", "--trials", "3", "--out", str(out)]) == 0
    assert "recommended tau=3.5" in capsys.readouterr().out
    assert out.read_text().startswith("n,c,tau,rounds")


def test_console_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ada_arena.cli", "ka", "--n", "10", "--rounds", "40",
                           "--trials", "1", "--out", str(tmp_path / "ka.csv")],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("weak_ka: rate=")
    header = (tmp_path / "ka.csv").read_text().splitlines()[0].split(",")
    assert {"trial", "o1", "o2", "agree_bit", "best_G_error"} <= set(header)
