import subprocess
import sys

import pytest

from levysir.cli import main
from levysir.experiment_io import parse_config, parse_kv, preset


def test_preset_list(capsys):
    assert main(["preset-list"]) == 0
    out = capsys.readouterr().out
    assert "fig6_matched_a09" in out and "0.7426" in out


def test_analyze_prints_regime(capsys):
    assert main(["analyze", "--preset", "fig2_extinction"]) == 0
    kv = parse_kv(capsys.readouterr().out)
    assert kv["regime"] == "Extinction" and abs(float(kv["r0_bar"]) - 0.9976) < 5e-3


def test_check_exit_codes(tmp_path, capsys):
    assert main(["check", "--preset", "fig4_persistence"]) == 0
    text = "analysis.preset = fig4_persistence\nmodel.mortality = 0.3\n"
    (tmp_path / "weak.cfg").write_text(text)
    assert main(["check", "--config", str(tmp_path / "weak.cfg")]) == 1
    assert "H3: fail" in capsys.readouterr().out


def test_simulate_and_ensemble_write_files(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--preset", "fig4_persistence", "--t-end", "1", "--out", str(out)]) == 0
    assert (out / "path_0000.csv").exists()
    cfg = parse_config((out / "config.txt").read_text())
    assert cfg.sim.t_end == 1.0 and cfg.out_dir == str(out)
    out = tmp_path / "ens"
    assert main(["ensemble", "--preset", "fig2_extinction", "--paths", "3", "--t-end", "1",
                 "--seed", "5", "--dt", "0.002", "--out", str(out)]) == 0
    assert len(list(out.glob("path_*.csv"))) == 3
    cfg = parse_config((out / "config.txt").read_text())
    assert (cfg.sim.seed, cfg.sim.dt, cfg.paths) == (5, 0.002, 3)


def test_sample_ts_self_test(tmp_path, capsys):
    assert main(["sample-ts", "--preset", "fig2_extinction", "--paths", "3000", "--out", str(tmp_path)]) == 0
    assert "variance" in capsys.readouterr().out
    assert (tmp_path / "jump_train.csv").exists()


def test_bad_config_exit_code(tmp_path, capsys):
    (tmp_path / "bad.cfg").write_text("analysis.preset = fig2_extinction\njumps.alpha = 1\nfoo = 2\n")
    assert main(["analyze", "--config", str(tmp_path / "bad.cfg")]) == 2
    err = capsys.readouterr().err
    assert "UnknownKey at foo" in err and "InvariantViolation at jumps.alpha" in err


def test_requires_a_configuration():
    with pytest.raises(SystemExit):
        main(["analyze"])


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "levysir", "preset-list"], capture_output=True, text=True)
    assert r.returncode == 0 and "deterministic_ode" in r.stdout
