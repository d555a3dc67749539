import json

from maopac.cli import main


def test_validate_default(capsys):
    assert main(["validate", "default"]) == 0
    assert "ok" in capsys.readouterr().out


def test_invalid_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"hyper": {"gamma": 0.6, "beta0": -1}}))
    assert main(["validate", str(path)]) == 2
    err = capsys.readouterr().err
    assert "Assumption 4" in err and "Assumption 5" in err


def test_bounds_table(capsys):
    assert main(["bounds", "default", "--n", "10", "--j", "5", "--eps", "0.1"]) == 0
    out = capsys.readouterr().out
    for name in ("Omega", "B_omega_n", "B1_tilde", "belief tolerance"):
        assert name in out


def test_bounds_rejects_bad_step(capsys):
    assert main(["bounds", "default", "--n", "5", "--j", "9", "--eps", "0.1"]) == 1


def test_run_writes_metrics(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"run": {"steps": 15, "seeds": [2]}}))
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "seed_2.csv").is_file()
    assert "median final cumulative average reward" in capsys.readouterr().out
