import csv
import json
from dataclasses import asdict

import pytest

from dsa_marl.agents import Hyperparameters
from dsa_marl.cli import main
from dsa_marl.config import ConfigError, default_dict, load_config
from dsa_marl.topology import ScenarioConfig

SMALL = {"hyperparameters": {"n_phases": 3, "phase_len": 10}}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_embedded_default_matches_dataclasses():
    doc = default_dict()
    assert doc["scenario"] == asdict(ScenarioConfig())
    hyper = asdict(Hyperparameters())
    hyper["hidden"] = list(hyper["hidden"])
    assert doc["hyperparameters"] == hyper
    assert doc["scenario"]["underlay_limit"] == 0.05
    assert doc["scenario"]["bandwidth_hz"] == 180e3


def test_unknown_key_named(tmp_path):
    with pytest.raises(ConfigError, match="scenario.gird"):
        load_config(write(tmp_path / "c.json", {"scenario": {"gird": 4}}))
    with pytest.raises(ConfigError, match="'speed'"):
        load_config(write(tmp_path / "c.json", {"speed": 1}))


def test_bad_value_named(tmp_path):
    with pytest.raises(ConfigError, match="hyperparameters.lam"):
        load_config(write(tmp_path / "c.json", {"hyperparameters": {"lam": -1}}))
    with pytest.raises(ConfigError, match="hyperparameters.c"):
        load_config(write(tmp_path / "c.json", {"hyperparameters": {"c": "30"}}))
    with pytest.raises(ConfigError, match="preset"):
        load_config(write(tmp_path / "c.json", {"preset": "nope"}))


def test_cli_overrides_file(tmp_path):
    cfg = load_config(write(tmp_path / "c.json", {"seed": 4, "runs": 7}), {"seed": 9})
    assert (cfg.seed, cfg.runs) == (9, 7)


def test_bad_config_exit_code(tmp_path, capsys):
    path = write(tmp_path / "c.json", {"hyperparameters": {"gama": 0.5}})
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) != 0
    assert "hyperparameters.gama" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_run_writes_summary_and_reloads(tmp_path):
    cfg = write(tmp_path / "c.json", SMALL)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--runs", "3", "--seed", "1",
                 "--out", str(out1)]) == 0
    rows = read_csv(out1 / "summary.csv")
    assert len(rows) == 1 and rows[0]["preset"] == "default" and rows[0]["runs"] == "3"
    assert {"mean_rel_diff", "mean_phases", "pct_optimal"} <= set(rows[0])
    assert [r["seed"] for r in read_csv(out1 / "runs.csv")] == ["1", "2", "3"]
    # the effective config reproduces the run
    assert main(["run", "--config", str(out1 / "config.json"), "--out", str(out2)]) == 0
    assert read_csv(out2 / "runs.csv") == read_csv(out1 / "runs.csv")


def test_table1_rows(tmp_path):
    cfg = write(tmp_path / "c.json", SMALL)
    assert main(["table1", "--config", str(cfg), "--runs", "1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "summary.csv")
    assert [r["label"] for r in rows] == [
        "Default setting", "Standard DQL c=1", "Standard DQL c=60", "c=1", "c=60",
        "Mini batch size = 120", "Mini batch size = 30", "Uncoordinated per-CR reward"]


def test_trace_schema(tmp_path):
    cfg = write(tmp_path / "c.json", SMALL)
    assert main(["trace", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "qtrace.csv")
    assert list(rows[0]) == (["agent", "step", "phase", "state"] + [f"q_{a}" for a in range(14)]
                             + ["delta", "policy_action"])
    # two agents, two states, 30 steps
    assert len(rows) == 2 * 2 * 30
    assert rows[-1]["phase"] == "3"


def test_oracle_command(tmp_path, capsys):
    assert main(["oracle", "--seed", "2", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "oracle.json").read_text())
    assert len(doc["best_joint_action"]) == 2
    assert "2" in json.loads((tmp_path / "oracle_cache.json").read_text())
    # a second call is served from the cache
    assert main(["oracle", "--seed", "2", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "oracle.json").read_text()) == doc


def test_gradcheck_command(capsys):
    assert main(["gradcheck", "--runs", "5"]) == 0
    assert "max relative error" in capsys.readouterr().out


def test_outputs_stay_under_out(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write(tmp_path / "c.json", SMALL)
    before = set(tmp_path.iterdir())
    main(["run", "--config", str(cfg), "--runs", "1", "--out", str(tmp_path / "o")])
    assert set(tmp_path.iterdir()) - before == {tmp_path / "o"}
